import numpy as np
import pytest

from irsmimo.arrays import ArraySpec, beam_gain, steering
from irsmimo.codebook import (build_codebook, num_stages, projection_beam,
                              selection_matrix, two_rf_factorization, wide_beam)


def leaf_matrix(codebook):
    return np.stack([codebook.beam(codebook.num_stages, i).coefficients
                     for i in range(codebook.num_leaves)], axis=1)


def leaf_gains(codebook, beam):
    return np.array([beam_gain(beam, codebook.spec, float(d))
                     for d in codebook.leaf_grid.directions])


def test_num_stages_paper_tree():
    assert num_stages(3, 22) == 3


def test_num_stages_exact_power_and_ceiling():
    assert num_stages(2, 64) == 6
    assert num_stages(2, 65) == 7


def test_num_stages_validation():
    with pytest.raises(ValueError):
        num_stages(1, 8)
    with pytest.raises(ValueError):
        num_stages(2, 0)


def test_selection_matrix_contiguous_block():
    D = selection_matrix(2, 3, 22)
    assert D.shape == (22, 9)
    assert list(np.nonzero(D[:, 0])[0]) == [0, 1, 2]


def test_selection_matrix_drops_padded_rows():
    # column 7 keeps only leaf 21; column 8 is entirely padding
    D = selection_matrix(2, 3, 22)
    assert list(np.nonzero(D[:, 7])[0]) == [21]
    assert not D[:, 8].any()


def test_selection_matrix_column_sums_count_live_descendants():
    D = selection_matrix(1, 3, 22)
    assert list(D.sum(axis=0)) == [9, 9, 4]


def test_selection_matrix_partitions_leaves():
    for stage in (1, 2, 3):
        D = selection_matrix(stage, 3, 22)
        assert np.all(D.sum(axis=1) == 1.0)


def test_wide_beam_equals_leaf_for_square_grid():
    # K = N_a: the leaves are orthonormal, so the projection returns them
    spec = ArraySpec(16)
    book = build_codebook(spec, 2, 16)
    L = leaf_matrix(book)
    for i in (0, 7, 15):
        target = np.zeros(16)
        target[i] = 1.0
        raw = projection_beam(L, target)
        raw /= np.linalg.norm(raw)
        leaf = book.beam(book.num_stages, i).coefficients
        phase = np.vdot(leaf, raw)
        assert np.allclose(raw * np.conj(phase) / abs(phase), leaf, atol=1e-12)


def test_wide_beam_is_least_squares_solution():
    # oracle: generic lstsq on leaves^H w = target
    spec = ArraySpec(32)
    book = build_codebook(spec, 2, 64)
    L = leaf_matrix(book)
    for stage, index in [(1, 0), (2, 3), (3, 5)]:
        from irsmimo.codebook import selection_matrix as sel
        target = sel(stage, 2, 64)[:, index]
        raw = projection_beam(L, target)
        oracle, *_ = np.linalg.lstsq(L.conj().T, target, rcond=None)
        assert np.allclose(raw, oracle, atol=1e-10)


def test_wide_beam_null_for_dead_slot():
    assert wide_beam(leaf_matrix(build_codebook(ArraySpec(16), 3, 22)),
                     2, 8, 3) is None


def test_wide_beam_descendants_beat_non_descendants_stage_one():
    book = build_codebook(ArraySpec(32), 2, 64)
    gains = leaf_gains(book, book.beam(1, 0))
    assert gains[:32].min() > gains[32:].max()


@pytest.mark.parametrize("branching,num_leaves,floor", [(2, 64, 0.95), (3, 96, 0.85)])
def test_discrimination_margin(branching, num_leaves, floor):
    # measured constants: worst min-descendant / max-non-descendant amplitude
    # ratio is 0.978 at (2, 32, 64) and 0.884 at (3, 32, 96); adjacent-leaf
    # leakage keeps band-limited beams below the idealized 0/1 targets
    book = build_codebook(ArraySpec(32), branching, num_leaves)
    worst = np.inf
    for stage in range(1, book.num_stages):
        span = branching ** (book.num_stages - stage)
        for index in range(branching ** stage):
            beam = book.beam(stage, index)
            if beam is None:
                continue
            gains = leaf_gains(book, beam)
            descendants = np.arange(index * span,
                                    min((index + 1) * span, num_leaves))
            mask = np.zeros(num_leaves, dtype=bool)
            mask[descendants] = True
            worst = min(worst, gains[mask].min() / gains[~mask].max())
    assert worst >= floor


def test_bottom_stage_layout_and_common_edges():
    book = build_codebook(ArraySpec(16), 3, 22)
    bottom = book.stages[book.num_stages]
    assert sum(b is not None for b in bottom) == 22
    assert all(b is None for b in bottom[22:])
    # every live leaf is the grid steering vector: common coverage-edge energy
    rho = book.leaf_grid.edge_energy
    for i in (0, 10, 21):
        edge = float(np.arcsin(np.clip(book.leaf_grid.sines[i] + 1 / 22, -1, 1)))
        assert beam_gain(bottom[i], book.spec, edge) == pytest.approx(rho, abs=1e-9)


def test_children_indexing():
    book = build_codebook(ArraySpec(16), 3, 22)
    assert book.children(0, 0) == [0, 1, 2]
    assert book.children(book.num_stages, 0) == []
    kids = book.children(2, 7)
    live = [k for k in kids if book.beam(3, k) is not None]
    assert len(live) == 1


def test_children_range_errors():
    book = build_codebook(ArraySpec(16), 2, 16)
    with pytest.raises(ValueError):
        book.children(1, 5)
    with pytest.raises(ValueError):
        book.children(9, 0)


def test_calibration_live_slots_positive():
    book = build_codebook(ArraySpec(32), 3, 96)
    for stage in range(1, book.num_stages + 1):
        for index in range(3 ** stage):
            scale = book.scale(stage, index)
            if book.beam(stage, index) is None:
                assert scale == 0.0
            else:
                assert scale > 0.0


def test_build_rejects_other_spacings():
    with pytest.raises(ValueError):
        build_codebook(ArraySpec(16, spacing_wavelengths=0.25), 2, 16)


def test_two_rf_factorization_random_unit_vectors():
    rng = np.random.default_rng(23)
    for _ in range(100):
        w = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        w /= np.linalg.norm(w)
        from irsmimo.arrays import BeamVector
        analog, digital = two_rf_factorization(BeamVector(w))
        assert np.max(np.abs(np.abs(analog) - 1.0)) < 1e-12
        assert np.max(np.abs(analog @ digital - w)) <= 1e-10


def test_two_rf_factorization_steering_vector():
    # constant-modulus input: the two analog columns agree up to the split
    spec = ArraySpec(16)
    w = steering(spec, 0.4)
    analog, digital = two_rf_factorization(w)
    assert np.max(np.abs(analog @ digital - w.coefficients)) <= 1e-12


def test_two_rf_factorization_zero_entry_antipodal():
    from irsmimo.arrays import BeamVector
    w = np.array([0.0, 0.6, 0.8], dtype=complex)
    analog, digital = two_rf_factorization(BeamVector(w))
    # zero rows split into antipodal phases
    assert abs(analog[0, 0] + analog[0, 1]) < 1e-12
    assert np.max(np.abs(analog @ digital - w)) <= 1e-12


def test_two_rf_factorization_rejects_zero_beam():
    from irsmimo.arrays import BeamVector
    with pytest.raises(ValueError):
        two_rf_factorization(BeamVector(np.zeros(4, dtype=complex)))
