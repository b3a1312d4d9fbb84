"""Uniform linear arrays: steering vectors, beam gains, and the sine-uniform beam grid."""

from dataclasses import dataclass

import numpy as np
from scipy.special import diric


@dataclass(frozen=True)
class ArraySpec:
    """A uniform linear array.

    Parameters
    ----------
    num_elements : int
        Number of antenna elements.
    spacing_wavelengths : float
        Inter-element spacing as a fraction of the carrier wavelength
        (default 0.5, i.e. half-wavelength).
    orientation_angle : float
        Broadside direction in scene coordinates, radians.
    """

    num_elements: int
    spacing_wavelengths: float = 0.5
    orientation_angle: float = 0.0

    def __post_init__(self):
        if self.num_elements < 1:
            raise ValueError("num_elements must be >= 1")
        if self.spacing_wavelengths <= 0:
            raise ValueError("spacing_wavelengths must be positive")


@dataclass(frozen=True)
class BeamVector:
    """Complex beamforming weights plus a kind tag ('narrow', 'wide', or 'omni').

    Narrow and wide beams carry unit Euclidean norm; omni is the raw
    single-element excitation.
    """

    coefficients: np.ndarray
    kind: str = "narrow"

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=complex)
        object.__setattr__(self, "coefficients", coeffs)
        if self.kind not in ("narrow", "wide", "omni"):
            raise ValueError(f"unknown beam kind {self.kind!r}")
        if self.kind != "omni" and abs(np.linalg.norm(coeffs) - 1.0) > 1e-9:
            raise ValueError("narrow/wide beams must have unit norm")

    def conj(self) -> "BeamVector":
        return BeamVector(np.conj(self.coefficients), kind=self.kind)


@dataclass(frozen=True)
class BeamGrid:
    """K narrow-beam directions whose sines uniformly partition (-1, 1).

    `directions` holds the front-range representatives; back-range twins are
    pi minus them. `edge_energy` is the common amplitude gain rho at every
    coverage edge.
    """

    num_elements: int
    num_beams: int
    directions: np.ndarray
    edge_energy: float

    @property
    def sines(self) -> np.ndarray:
        return np.sin(self.directions)


def steering_coefficients(num_elements: int, spacing_wavelengths: float,
                          angle: float) -> np.ndarray:
    n = np.arange(num_elements)
    phase = 2.0 * np.pi * spacing_wavelengths * n * np.sin(angle)
    return np.exp(1j * phase) / np.sqrt(num_elements)


def steering(spec: ArraySpec, angle: float) -> BeamVector:
    """Unit-norm array response vector of `spec` in direction `angle` (radians)."""
    return BeamVector(
        steering_coefficients(spec.num_elements, spec.spacing_wavelengths, angle),
        kind="narrow",
    )


def omni(spec: ArraySpec) -> BeamVector:
    """Single-active-element beam (first element, unit power)."""
    coeffs = np.zeros(spec.num_elements, dtype=complex)
    coeffs[0] = 1.0
    return BeamVector(coeffs, kind="omni")


def beam_gain(w: BeamVector, spec: ArraySpec, probe: float) -> float:
    """Amplitude gain |w^H a(probe)| of beam `w` toward direction `probe`.

    For a unit-norm `w` the value lies in [0, 1].
    """
    coeffs = w.coefficients
    if coeffs.shape[0] != spec.num_elements:
        raise ValueError(
            f"beam length {coeffs.shape[0]} does not match array "
            f"size {spec.num_elements}"
        )
    a = steering_coefficients(spec.num_elements, spec.spacing_wavelengths, probe)
    return float(abs(np.vdot(coeffs, a)))


def pattern_gain(num_elements: int, sine_offset) -> np.ndarray:
    """Half-wavelength beam pattern |sin(N pi x / 2) / (N sin(pi x / 2))|.

    `sine_offset` is sin(probe) - sin(beam direction). Safe at x = 0 where the
    value is 1.
    """
    x = np.asarray(sine_offset, dtype=float)
    return np.abs(diric(np.pi * x, num_elements))


def edge_energy(num_elements: int, num_beams: int) -> float:
    """Common coverage-edge amplitude rho for `num_beams` beams on `num_elements` antennas."""
    _require_grid_regime(num_elements, num_beams)
    return float(np.sin(num_elements * np.pi / (2 * num_beams))
                 / (num_elements * np.sin(np.pi / (2 * num_beams))))


def grid_directions(num_elements: int, num_beams: int) -> BeamGrid:
    """Front-range beam directions with sines (2i - 1)/K - 1, i = 1..K.

    The formulas assume half-wavelength spacing; callers holding an ArraySpec
    should gate on `require_half_wavelength` first.
    """
    _require_grid_regime(num_elements, num_beams)
    i = np.arange(1, num_beams + 1)
    directions = np.arcsin((2.0 * i - 1.0) / num_beams - 1.0)
    return BeamGrid(
        num_elements=num_elements,
        num_beams=num_beams,
        directions=directions,
        edge_energy=edge_energy(num_elements, num_beams),
    )


def nearest_direction(grid: BeamGrid, angle: float) -> int:
    """Index of the grid beam closest to `angle` in sine-domain distance."""
    return int(np.argmin(np.abs(grid.sines - np.sin(angle))))


def front_range(angle: float) -> float:
    """Front-range representative in [-pi/2, pi/2] of an arbitrary direction."""
    return float(np.arcsin(np.sin(angle)))


def require_half_wavelength(spec: ArraySpec) -> None:
    """Reject arrays the sine-uniform grid formulas were not derived for."""
    if abs(spec.spacing_wavelengths - 0.5) > 1e-12:
        raise ValueError(
            "beam-grid formulas require half-wavelength spacing, got "
            f"{spec.spacing_wavelengths} wavelengths"
        )


def _require_grid_regime(num_elements: int, num_beams: int) -> None:
    if num_elements < 1:
        raise ValueError("num_elements must be >= 1")
    if num_beams < num_elements:
        raise ValueError(
            f"need at least as many beams as antennas (K={num_beams} < "
            f"N={num_elements})"
        )
