"""Ergodic toolkit: Lyapunov exponents, basins, coverage, mixing tables."""

import numpy as np
import pytest

from kan3 import ergodic as erg
from kan3.ergodic import (
    TORUS0,
    TORUS1,
    UNDECIDED,
    BasinGrid,
    EmpiricalMeasure,
    Region,
    birkhoff,
    center_lyapunov,
    classify_basins,
    grid_points,
    intermingled_test,
    invariance_defect,
    manifold_coverage,
    mixing_diagnostic,
    nonmixing_certificate,
    push_u_disk,
    standard_region_pairs,
    tv_binned,
)
from kan3.kanmap import make_kan_map


@pytest.fixture(scope="module")
def K():
    return make_kan_map(0.1)


def test_birkhoff_constant_observable(K):
    x0 = np.array([[0.3, 0.7, 0.2]])
    avg = birkhoff(K, x0, lambda p: np.ones(len(p)), 50)
    assert avg[0] == pytest.approx(1.0, abs=1e-12)


def test_center_lyapunov_at_fixed_fiber_points(K):
    # over the sink r the torus theta=0 attracts at exactly -pi t
    r = K.labels["r"]
    x0 = np.array([[r[0], r[1], 0.0]])
    lam = center_lyapunov(K, x0, 2000)
    assert lam[0] == pytest.approx(-np.pi * K.t, rel=1e-9)


def test_torus_lyapunov_fast_path_matches_generic(K):
    rng = np.random.default_rng(1)
    pts = np.column_stack([rng.random((8, 2)), np.zeros(8)])
    fast = center_lyapunov(K, pts, 400)          # exact on-torus path
    slow = erg.center_lyapunov(K, pts + [0, 0, 1e-14], 400)
    assert np.max(np.abs(fast - slow)) < 1e-6


def test_empirical_measure_validation():
    pts = np.zeros((4, 3))
    with pytest.raises(ValueError):
        EmpiricalMeasure(pts, np.array([0.5, 0.5, 0.5, 0.5]))
    m = EmpiricalMeasure(pts, np.full(4, 0.25))
    assert m.mass_near_torus(0, 0.1) == pytest.approx(1.0)
    assert m.mass_near_torus(1, 0.1) == pytest.approx(0.0)


def test_push_u_disk_mass_concentrates(K):
    m = push_u_disk(K, np.array([0.31, 0.41, 0.1]), n=150, n_samples=64)
    assert m.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert m.mass_near_torus(0, 0.1) > 0.5
    d = invariance_defect(K, m)
    assert 0.0 <= d <= 1.0


def test_tv_binned_extremes():
    a = EmpiricalMeasure(np.tile([[0.1, 0.1, 0.1]], (10, 1)), np.full(10, 0.1))
    b = EmpiricalMeasure(np.tile([[0.9, 0.9, -0.9]], (10, 1)), np.full(10, 0.1))
    assert tv_binned(a, a) == 0.0
    assert tv_binned(a, b) == pytest.approx(1.0)


def test_grid_points_theta_row_exact():
    pts = grid_points((4, 4, 17), seed=0)
    th = np.unique(np.round(pts[:, 2], 12))
    assert 0.0 in th
    assert len(pts) == 4 * 4 * 17


def test_grid_points_jitter_deterministic():
    a = grid_points((4, 4, 5), seed=3, samples_per_cell=3)
    b = grid_points((4, 4, 5), seed=3, samples_per_cell=3)
    c = grid_points((4, 4, 5), seed=4, samples_per_cell=3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_classify_basins_small_and_thread_invariance(K):
    kw = dict(shape=(8, 8, 5), n=400, delta=0.05, seed=0)
    g1 = classify_basins(K, threads=1, **kw)
    g4 = classify_basins(K, threads=4, **kw)
    assert np.array_equal(g1.labels, g4.labels)
    c = g1.counts()
    assert c["TORUS0"] > 0 and c["TORUS1"] > 0
    assert g1.decided_fraction() > 0.9


def test_intermingled_test_synthetic_checkerboard():
    lab = np.zeros((8, 8, 4, 1), dtype=np.int8)
    lab[::2] = TORUS1  # alternating slabs: every 4x4x2 coarse cell sees both
    g = BasinGrid((8, 8, 4), lab, 10, 2, 0.05, 0)
    rep = intermingled_test(g, coarse=(2, 2, 2))
    assert rep["fraction_with_both"] == 1.0


def test_intermingled_test_one_sided():
    lab = np.full((8, 8, 4, 1), TORUS0, dtype=np.int8)
    g = BasinGrid((8, 8, 4), lab, 10, 2, 0.05, 0)
    rep = intermingled_test(g, coarse=(2, 2, 2))
    assert rep["fraction_with_both"] == 0.0
    assert rep["undecided_rate"] == 0.0


def test_manifold_coverage_reaches_everywhere(K):
    rep = manifold_coverage(K, "fiber_forward", depth=6, grid=(8, 8, 4),
                            budget=2_000_000, n_initial=1024)
    assert rep.fraction == 1.0
    assert not rep.budget_exhausted


def test_manifold_coverage_budget_cap(K):
    rep = manifold_coverage(K, "fiber_forward", depth=6, grid=(16, 16, 8),
                            budget=3000, n_initial=1024)
    assert rep.budget_exhausted
    assert rep.fraction < 1.0


def test_region_wrap_and_sampling():
    r = Region(None, (0.7, -0.7))
    assert r.contains(np.array([[0.1, 0.1, 0.9]]))[0]
    assert r.contains(np.array([[0.1, 0.1, -0.9]]))[0]
    assert not r.contains(np.array([[0.1, 0.1, 0.0]]))[0]
    rng = np.random.default_rng(0)
    pts = r.sample(rng, 500)
    assert np.all(r.contains(pts))


def test_nonmixing_certificate(K):
    rep = nonmixing_certificate(K, n_samples=20_000, n_max=15)
    assert rep["ok"]
    assert rep["one_step_flip"]
    assert rep["odd_hits"] == 0


def test_mixing_diagnostic_standard_pairs(K):
    pairs = standard_region_pairs()
    assert len(pairs) == 8
    table = mixing_diagnostic(K, pairs, n_max=8, n_samples=2000)
    assert table["hits"].shape == (8, 8)
    # the band is symmetric under the one-step fiber flip, so self pairs
    # keep meeting themselves; every pair connects within a few steps
    assert np.all(np.any(table["hits"], axis=1))
    assert np.all(table["hits"][:, -1])
