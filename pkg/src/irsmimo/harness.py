"""Scenario configuration, geometry sampling, Monte Carlo experiments, and CSV output."""

import csv
from dataclasses import dataclass, replace

import numpy as np

from .arrays import ArraySpec, BeamGrid, grid_directions
from .channel import (CascadeChannel, IrsLink, LinkAngles, PhysicalConstants,
                      assemble, compensation_factor, make_link, path_loss)
from .codebook import HierarchicalCodebook, build_codebook
from .irs_control import random_mode
from .training import (AngleEstimate, LinkScenario, MeasurementModel, SlotCount,
                       cooperative_estimate, misalignment_curve)
from .transmission import (build_beamformers, design_irs, estimate_composite_loss,
                           fdb_upper_bound, parallel_rate, spectral_efficiency,
                           water_filling)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * np.log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(linear: float) -> float:
    return 10.0 * np.log10(linear)


@dataclass(frozen=True)
class ScenarioConfig:
    """Every knob of the simulated scene, in config-file units (dB quantities in dB)."""

    frequency_hz: float = 3e11
    absorption_per_m: float = 0.0033
    noise_power_dbm: float = -80.0
    tx_gain_dbi: float = 18.0
    rx_gain_dbi: float = 18.0
    irs_element_gain_dbi: float = 0.0
    reflection_amplitude: float = 1.0
    num_tx_antennas: int = 32
    num_rx_antennas: int = 32
    num_irs_elements: int = 32
    num_irs: int = 3
    num_tx_rf_chains: int = 4
    num_rx_rf_chains: int = 4
    num_streams: int = 3
    beam_ratio: float = 2.0       # K / N at both terminals
    irs_sweep_ratio: float = 2.0  # K_r / N_r for the phase-1 sweep
    branching: int = 2
    alice_y_range: tuple = (0.0, 5.0)
    bob_y_range: tuple = (5.0, 10.0)
    irs_positions: tuple = ((5.0, 4.0), (5.0, 5.0), (5.0, 6.0))
    pilot_repetitions: int = 10
    power_grid_dbm: tuple = (0.0, 10.0, 20.0, 30.0)
    mp_snr_grid_db: tuple = tuple(float(v) for v in range(-10, 21, 2))
    mp_antenna_counts: tuple = (32, 64)
    mp_beam_ratios: tuple = (2.0, 3.0)
    trials: int = 10000
    seed: int = 1

    def __post_init__(self):
        if len(self.irs_positions) != self.num_irs:
            raise ValueError(
                f"num_irs={self.num_irs} but {len(self.irs_positions)} "
                "irs_positions given"
            )
        if len(set(self.irs_positions)) != len(self.irs_positions):
            raise ValueError("irs_positions must be distinct")
        for name in ("alice_y_range", "bob_y_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must be an increasing pair")
        if self.num_irs > min(self.num_tx_rf_chains, self.num_rx_rf_chains):
            raise ValueError("num_irs must not exceed the RF chain counts")
        if not self.num_irs <= self.num_streams <= min(self.num_tx_rf_chains,
                                                       self.num_rx_rf_chains):
            raise ValueError("need num_irs <= num_streams <= RF chains")
        if self.beam_ratio < 1.0 or self.irs_sweep_ratio < 1.0:
            raise ValueError("beam ratios must be >= 1")
        if self.num_irs_sweep_beams % 2 != 0:
            raise ValueError("the IRS sweep grid size K_r must be even")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.pilot_repetitions < 1:
            raise ValueError("pilot_repetitions must be >= 1")

    @property
    def num_tx_beams(self) -> int:
        return int(round(self.beam_ratio * self.num_tx_antennas))

    @property
    def num_rx_beams(self) -> int:
        return int(round(self.beam_ratio * self.num_rx_antennas))

    @property
    def num_irs_sweep_beams(self) -> int:
        return int(round(self.irs_sweep_ratio * self.num_irs_elements))

    @property
    def noise_power_watts(self) -> float:
        return dbm_to_watts(self.noise_power_dbm)

    def physical_constants(self) -> PhysicalConstants:
        return PhysicalConstants(
            carrier_frequency=self.frequency_hz,
            absorption_coefficient=self.absorption_per_m,
            tx_gain=db_to_linear(self.tx_gain_dbi),
            rx_gain=db_to_linear(self.rx_gain_dbi),
            irs_element_gain=db_to_linear(self.irs_element_gain_dbi),
            reflection_amplitude=self.reflection_amplitude,
        )

    def tx_spec(self) -> ArraySpec:
        return ArraySpec(self.num_tx_antennas, orientation_angle=0.0)

    def rx_spec(self) -> ArraySpec:
        return ArraySpec(self.num_rx_antennas, orientation_angle=0.0)

    def irs_spec(self) -> ArraySpec:
        return ArraySpec(self.num_irs_elements, orientation_angle=np.pi)


@dataclass(frozen=True)
class ScenarioAssets:
    """Per-config objects reused across trials (codebooks are costly to build)."""

    consts: PhysicalConstants
    tx_spec: ArraySpec
    rx_spec: ArraySpec
    irs_spec: ArraySpec
    tx_codebook: HierarchicalCodebook
    rx_codebook: HierarchicalCodebook
    sweep_grid: BeamGrid


@dataclass(frozen=True)
class SampledGeometry:
    alice_position: tuple
    bob_position: tuple
    irs_positions: tuple
    resamples: int


@dataclass(frozen=True)
class TrialRecord:
    """Replayable summary of one estimation trial."""

    seed: int
    trial_index: int
    power_dbm: float
    geometry: SampledGeometry
    true_angles: tuple
    true_losses: tuple
    estimates: tuple
    rates: dict
    slots: SlotCount


def scenario_assets(config: ScenarioConfig) -> ScenarioAssets:
    return ScenarioAssets(
        consts=config.physical_constants(),
        tx_spec=config.tx_spec(),
        rx_spec=config.rx_spec(),
        irs_spec=config.irs_spec(),
        tx_codebook=build_codebook(config.tx_spec(), config.branching,
                                   config.num_tx_beams),
        rx_codebook=build_codebook(config.rx_spec(), config.branching,
                                   config.num_rx_beams),
        sweep_grid=grid_directions(config.num_irs_elements,
                                   config.num_irs_sweep_beams),
    )


def _path_geometry(terminal_y: float, irs_position) -> tuple:
    """Distance and transverse sine of the terminal-to-IRS ray.

    Terminals sit on the x = 0 wall with broadside +x; IRSs sit on the far
    wall with broadside -x; all arrays run along +y, so the angle off
    broadside has sine (other endpoint's y - own y) / distance on each side.
    """
    x_i, y_i = irs_position
    distance = float(np.hypot(x_i, y_i - terminal_y))
    if distance < 1e-9:
        raise ValueError("degenerate geometry: terminal on top of an IRS")
    sine_at_terminal = (y_i - terminal_y) / distance
    sine_at_irs = (terminal_y - y_i) / distance
    return distance, sine_at_terminal, sine_at_irs


def sample_scenario(config: ScenarioConfig, rng: np.random.Generator,
                    assets: ScenarioAssets = None):
    """Draw terminal positions and build the cascade channel they induce.

    Returns (LinkScenario, SampledGeometry). Degenerate or out-of-front-range
    draws are resampled and counted.
    """
    if assets is None:
        assets = scenario_assets(config)
    for attempt in range(1000):
        alice_y = rng.uniform(*config.alice_y_range)
        bob_y = rng.uniform(*config.bob_y_range)
        try:
            links = []
            for pos in config.irs_positions:
                d_in, sin_am, sin_rm = _path_geometry(alice_y, pos)
                d_out, sin_bn, sin_rn = _path_geometry(bob_y, pos)
                if max(abs(sin_am), abs(sin_rm), abs(sin_bn),
                       abs(sin_rn)) >= 1.0 - 1e-12:
                    raise ValueError("ray parallel to an array axis")
                angles = LinkAngles(
                    tx_departure=float(np.arcsin(sin_am)),
                    irs_arrival=float(np.arcsin(sin_rm)),
                    irs_departure=float(np.arcsin(sin_rn)),
                    rx_arrival=float(np.arcsin(sin_bn)),
                )
                links.append(IrsLink(
                    incident=make_link(assets.consts, assets.tx_spec,
                                       assets.irs_spec, angles.tx_departure,
                                       angles.irs_arrival, d_in),
                    departing=make_link(assets.consts, assets.irs_spec,
                                        assets.rx_spec, angles.irs_departure,
                                        angles.rx_arrival, d_out),
                    eta=compensation_factor(assets.consts,
                                            config.num_irs_elements),
                    distance_in=d_in,
                    distance_out=d_out,
                    angles=angles,
                ))
        except ValueError:
            continue
        cascade = CascadeChannel(links=tuple(links), tx_spec=assets.tx_spec,
                                 rx_spec=assets.rx_spec,
                                 irs_spec=assets.irs_spec)
        scenario = LinkScenario(
            consts=assets.consts,
            cascade=cascade,
            sweep_grid=assets.sweep_grid,
            tx_codebook=assets.tx_codebook,
            rx_codebook=assets.rx_codebook,
        )
        geometry = SampledGeometry(
            alice_position=(0.0, alice_y),
            bob_position=(0.0, bob_y),
            irs_positions=tuple(config.irs_positions),
            resamples=attempt,
        )
        return scenario, geometry
    raise RuntimeError("could not sample a non-degenerate geometry")


def true_composite_loss(scenario: LinkScenario, irs_index: int) -> float:
    """Exact bridged end-to-end amplitude beta * eta * G_t * G_r * a(d_in) a(d_out)."""
    link = scenario.cascade.links[irs_index]
    consts = scenario.consts
    return (consts.reflection_amplitude * link.eta * consts.tx_gain
            * consts.rx_gain * path_loss(consts, link.distance_in)
            * path_loss(consts, link.distance_out))


def perfect_estimates(scenario: LinkScenario):
    """Estimates an ideal genie would report: true angles and true losses."""
    out = []
    for irs_index, link in enumerate(scenario.cascade.links):
        out.append(AngleEstimate(
            tx_departure=link.angles.tx_departure,
            irs_arrival=link.angles.irs_arrival,
            irs_departure=link.angles.irs_departure,
            rx_arrival=link.angles.rx_arrival,
            composite_loss=true_composite_loss(scenario, irs_index),
        ))
    return out


def non_irs_benchmark(H_random_irs: np.ndarray, power: float,
                      noise_power: float) -> float:
    """Fully digital bound over a channel whose IRSs hold random phases."""
    return fdb_upper_bound(H_random_irs, power, noise_power)


def _trial_seed(seed: int, trial: int, stream: int) -> np.random.Generator:
    # counter-based derivation keeps trials independent and order-free
    return np.random.default_rng(np.random.SeedSequence((seed, trial, stream)))


def _designed_rates(scenario, estimates, power, noise_power, config):
    """Assemble the designed channel and evaluate the hybrid rate."""
    gains = np.array([e.composite_loss for e in estimates])
    if not np.any(gains > 0):
        return 0.0
    allocation = water_filling(gains, power, noise_power)
    bf = build_beamformers(estimates, allocation,
                           scenario.cascade.tx_spec, scenario.cascade.rx_spec,
                           config.num_tx_rf_chains, config.num_rx_rf_chains,
                           config.num_streams)
    thetas = design_irs(estimates, scenario.cascade.irs_spec,
                        reflection_amplitude=scenario.consts.reflection_amplitude)
    H = assemble(scenario.cascade, thetas, scenario.consts)
    return spectral_efficiency(H, bf, power, noise_power)


@dataclass
class RateExperimentResult:
    rows: list
    trials: int
    ordering_violations: int = 0
    slot_totals: SlotCount = None


def run_rate_experiment(config: ScenarioConfig,
                        progress=None) -> RateExperimentResult:
    """Average the four benchmark curves over random terminal placements.

    Per trial and power point: run the full cooperative estimation at that
    power, design from the estimates, and evaluate (1) the proposed design
    under estimated CSI, (2) the proposed design under perfect CSI, (3) the
    fully digital bound with optimal IRSs, (4) the fully digital bound with
    random IRSs. Per-trial estimated-vs-random ordering violations are
    counted, not failed; they are possible at low power.
    """
    assets = scenario_assets(config)
    noise_power = config.noise_power_watts
    powers = [dbm_to_watts(p) for p in config.power_grid_dbm]
    sums = np.zeros((len(powers), 4))
    violations = 0
    slots_seen = None

    for trial in range(config.trials):
        geom_rng = _trial_seed(config.seed, trial, 0)
        scenario, _ = sample_scenario(config, geom_rng, assets)
        rand_rng = _trial_seed(config.seed, trial, 1)
        random_thetas = [random_mode(config.num_irs_elements, rand_rng,
                                     amplitude=config.reflection_amplitude)
                         for _ in range(config.num_irs)]
        genie = perfect_estimates(scenario)
        optimal_thetas = design_irs(genie, assets.irs_spec,
                                    config.reflection_amplitude)
        H_optimal = assemble(scenario.cascade, optimal_thetas, assets.consts)
        H_random = assemble(scenario.cascade, random_thetas, assets.consts)
        sv_optimal = np.linalg.svd(H_optimal, compute_uv=False)
        sv_random = np.linalg.svd(H_random, compute_uv=False)

        for p_index, power in enumerate(powers):
            meas_rng = _trial_seed(config.seed, trial, 2 + p_index)
            model = MeasurementModel(transmit_power=power,
                                     noise_power=noise_power)
            estimates, slots = cooperative_estimate(scenario, model,
                                                    rng=meas_rng)
            estimates = [
                replace(est, composite_loss=estimate_composite_loss(
                    scenario, l, estimates, model, rng=meas_rng,
                    pilot_repetitions=config.pilot_repetitions))
                for l, est in enumerate(estimates)
            ]
            slots_seen = slots
            rate_est = _designed_rates(scenario, estimates, power,
                                       noise_power, config)
            rate_perfect = _designed_rates(scenario, genie, power,
                                           noise_power, config)
            rate_fdb = _svd_rate(sv_optimal, power, noise_power)
            rate_rand = _svd_rate(sv_random, power, noise_power)
            if rate_rand > rate_est:
                violations += 1
            sums[p_index] += (rate_est, rate_perfect, rate_fdb, rate_rand)
        if progress is not None:
            progress(trial + 1, config.trials)

    rows = []
    for p_index, p_dbm in enumerate(config.power_grid_dbm):
        mean = sums[p_index] / config.trials
        rows.append({
            "power_dbm": float(p_dbm),
            "rate_proposed_est": mean[0],
            "rate_proposed_perfect": mean[1],
            "rate_fdb_upper": mean[2],
            "rate_no_irs": mean[3],
        })
    return RateExperimentResult(rows=rows, trials=config.trials,
                                ordering_violations=violations,
                                slot_totals=slots_seen)


def _svd_rate(singular_values: np.ndarray, power: float,
              noise_power: float) -> float:
    sv = singular_values[singular_values > 1e-300]
    if sv.size == 0 or power <= 0:
        return 0.0
    allocation = water_filling(sv, power, noise_power)
    return parallel_rate(sv, allocation.factors, power, noise_power)


def run_mp_experiment(config: ScenarioConfig):
    """Misalignment curves for every configured (N_a, K) pair."""
    rows = []
    for num_elements in config.mp_antenna_counts:
        for ratio in config.mp_beam_ratios:
            num_beams = int(round(ratio * num_elements))
            rng = np.random.default_rng(
                np.random.SeedSequence((config.seed, num_elements, num_beams)))
            curve = misalignment_curve(num_elements, num_beams,
                                       config.mp_snr_grid_db, config.trials,
                                       rng=rng)
            for snr_db, mp in curve:
                rows.append({
                    "snr_db": snr_db,
                    "mp": mp,
                    "trials": config.trials,
                    "num_elements": num_elements,
                    "num_beams": num_beams,
                })
    return rows


def run_estimation_trace(config: ScenarioConfig, trial: int = 0) -> TrialRecord:
    """One full estimation pass at the strongest configured power."""
    assets = scenario_assets(config)
    power_dbm = max(config.power_grid_dbm)
    power = dbm_to_watts(power_dbm)
    geom_rng = _trial_seed(config.seed, trial, 0)
    scenario, geometry = sample_scenario(config, geom_rng, assets)
    meas_rng = _trial_seed(config.seed, trial, 2)
    model = MeasurementModel(transmit_power=power,
                             noise_power=config.noise_power_watts)
    estimates, slots = cooperative_estimate(scenario, model, rng=meas_rng)
    estimates = [
        replace(est, composite_loss=estimate_composite_loss(
            scenario, l, estimates, model, rng=meas_rng,
            pilot_repetitions=config.pilot_repetitions))
        for l, est in enumerate(estimates)
    ]
    genie = perfect_estimates(scenario)
    noise_power = config.noise_power_watts
    rand_rng = _trial_seed(config.seed, trial, 1)
    random_thetas = [random_mode(config.num_irs_elements, rand_rng,
                                 amplitude=config.reflection_amplitude)
                     for _ in range(config.num_irs)]
    H_optimal = assemble(scenario.cascade,
                         design_irs(genie, assets.irs_spec,
                                    config.reflection_amplitude),
                         assets.consts)
    H_random = assemble(scenario.cascade, random_thetas, assets.consts)
    rates = {
        "rate_proposed_est": _designed_rates(scenario, estimates, power,
                                             noise_power, config),
        "rate_proposed_perfect": _designed_rates(scenario, genie, power,
                                                 noise_power, config),
        "rate_fdb_upper": fdb_upper_bound(H_optimal, power, noise_power),
        "rate_no_irs": fdb_upper_bound(H_random, power, noise_power),
    }
    return TrialRecord(
        seed=config.seed,
        trial_index=trial,
        power_dbm=power_dbm,
        geometry=geometry,
        true_angles=tuple(l.angles for l in scenario.cascade.links),
        true_losses=tuple(true_composite_loss(scenario, l)
                          for l in range(scenario.cascade.num_irs)),
        estimates=tuple(estimates),
        rates=rates,
        slots=slots,
    )


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str, header, rows) -> None:
    """Fixed column order, full-precision floats, no locale dependence."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(row[key]) for key in header])


def _parse_pair(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 'lo,hi', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _parse_positions(text: str) -> tuple:
    points = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        points.append(_parse_pair(chunk))
    if not points:
        raise ValueError("no IRS positions given")
    return tuple(points)


def _parse_floats(text: str) -> tuple:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _parse_ints(text: str) -> tuple:
    return tuple(int(p) for p in text.split(",") if p.strip())


_CONFIG_PARSERS = {
    "frequency_hz": float,
    "absorption_per_m": float,
    "noise_power_dbm": float,
    "tx_gain_dbi": float,
    "rx_gain_dbi": float,
    "irs_element_gain_dbi": float,
    "reflection_amplitude": float,
    "num_tx_antennas": int,
    "num_rx_antennas": int,
    "num_irs_elements": int,
    "num_irs": int,
    "num_tx_rf_chains": int,
    "num_rx_rf_chains": int,
    "num_streams": int,
    "beam_ratio": float,
    "irs_sweep_ratio": float,
    "branching": int,
    "alice_y_range": _parse_pair,
    "bob_y_range": _parse_pair,
    "irs_positions": _parse_positions,
    "pilot_repetitions": int,
    "power_grid_dbm": _parse_floats,
    "mp_snr_grid_db": _parse_floats,
    "mp_antenna_counts": _parse_ints,
    "mp_beam_ratios": _parse_floats,
    "trials": int,
    "seed": int,
}


class ConfigError(Exception):
    """Raised for malformed config files or inconsistent settings."""


def load_config_file(path: str) -> dict:
    """Parse the flat `key = value` config format; '#' starts a comment."""
    values = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, text = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _CONFIG_PARSERS[key](text.strip())
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return values


def make_config(file_path: str = None, **overrides) -> ScenarioConfig:
    """Build a ScenarioConfig from an optional file plus keyword overrides."""
    values = load_config_file(file_path) if file_path else {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _CONFIG_PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = value
    try:
        return ScenarioConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
