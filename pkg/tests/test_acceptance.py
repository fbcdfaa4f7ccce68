"""Acceptance gates: one top-level pass/fail line per criterion.

Run with `pytest -v`; the long basin sweeps make the full file take about
half an hour on one core.
"""

import time

import numpy as np
import pytest

from kan3.blender import (
    BlenderModel,
    certify_cones,
    certify_geometry,
    consistency_with_kan,
    model_from_kan,
    verify_dichotomy,
)
from kan3.config import ExperimentConfig
from kan3.ergodic import (
    center_lyapunov,
    classify_basins,
    intermingled_test,
    invariance_defect,
    manifold_coverage,
    mixing_diagnostic,
    nonmixing_certificate,
    push_u_disk,
    standard_region_pairs,
)
from kan3.kanmap import break_torus, make_kan_map, su_torus_status, verify_kan_conditions
from kan3.reports import run as run_report
from kan3.rng import stream


def _line(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"criterion {num:2d} [{name}]: {status}  {detail}")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


@pytest.fixture(scope="module")
def K():
    return make_kan_map(0.1)


@pytest.fixture(scope="module")
def verify_01(K):
    t0 = time.time()
    rep = verify_kan_conditions(K, base_grid=512)
    rep["_runtime"] = time.time() - t0
    return rep


def test_01_structural_conditions(K, verify_01):
    reports = {0.1: verify_01}
    t0 = time.time()
    reports[0.05] = verify_kan_conditions(make_kan_map(0.05), base_grid=512)
    reports[0.05]["_runtime"] = time.time() - t0
    details = []
    ok = True
    for t, rep in reports.items():
        ok &= rep["ok"]
        ok &= max(rep["K1"]["err0"], rep["K1"]["err1"]) <= 1e-12
        for name, sink_at in (("r", 0.0), ("s", 1.0)):
            k2 = rep["K2"][name]
            w0 = np.exp(-np.pi * t) if sink_at == 0.0 else np.exp(np.pi * t)
            ok &= abs(k2["mult0"] - w0) <= 1e-6
            ok &= abs(k2["mult1"] - 1.0 / w0) <= 1e-6
            ok &= k2["interior_fixed_points"] == 0
        lam = K.anosov.lam
        ok &= (np.exp(-2 * np.pi * t) > 1.0 / lam) and (np.exp(2 * np.pi * t) < lam)
        ok &= rep["K3"]["ok"]
        bound = np.pi * t * (K.params.epsilon - 1.0) + 1e-3
        for level in (0, 1):
            v = rep["K4"][f"torus{level}"]["integral"]
            ok &= (v < 0) and (v <= bound)
        ok &= rep["_runtime"] < 60.0
        details.append(f"t={t}: K4={rep['K4']['torus0']['integral']:.6f} "
                       f"runtime={rep['_runtime']:.1f}s")
    _line(1, "structural conditions K1-K4", ok, "; ".join(details))


def test_02_blender_fixed_points_and_certificates():
    m = BlenderModel()
    ok = True
    details = []
    for which, saddle in ((1, m.saddle_p), (2, m.saddle_o)):
        img = m.branch(saddle[None, :], which)[0]
        res = np.abs(img - saddle)
        # s (index 0) contracts and c (index 2) is exact: forward residual
        ok &= max(res[0], res[2]) <= 1e-12
        # u (index 1) expands by L ~ 3.9e4, so the forward residual of the
        # nearest double is floor-limited at (L-1)*ulp/2 ~ 4e-12; assert the
        # distance to the true fixed point instead
        L = np.longdouble(m.lambda_pow)
        u_true = L / (L - 1) if which == 2 else np.longdouble(0.0)
        back = abs(np.longdouble(saddle[1]) - u_true)
        ok &= float(back) <= 1e-12
        details.append(f"saddle{which}: fwd={res.max():.2e} back_u={float(back):.2e}")
    geo = certify_geometry(m)
    ok &= geo["ok"]
    ok &= certify_cones(m, eps0=0.1)
    details.append(f"geometry={geo['ok']} cones(0.1)=True "
                   f"L={m.lambda_pow:.4g} mu={m.mu:.4f}")
    _line(2, "blender fixed points and certificates", ok, " ".join(details))


def test_03_strip_dichotomy():
    m = BlenderModel()
    t0 = time.time()
    rep = verify_dichotomy(m, n_samples=10_000)
    dt = time.time() - t0
    ok = (rep["ok"] and rep["n_failures"] == 0
          and rep["grown_ratio_min"] >= m.lam_prime - 1e-9
          and dt < 10.0)
    _line(3, "strip-width dichotomy", ok,
          f"10^4 intervals, max_steps={rep['max_steps']}, "
          f"ratio_min={rep['grown_ratio_min']:.6f} >= {m.lam_prime:.6f}, "
          f"runtime={dt:.1f}s")


def test_04_chart_consistency(K):
    m = model_from_kan(K)
    sup = consistency_with_kan(K, m, n_samples=1000)
    _line(4, "chart consistency of the affine return", sup <= 1e-6,
          f"sup gap = {sup:.3e} <= 1e-6")


def test_05_nonmixing_certificate(K):
    rep = nonmixing_certificate(K, n_samples=100_000, n_max=63)
    _line(5, "non-mixing parity certificate", rep["ok"],
          f"one_step_flip={rep['one_step_flip']} odd_hits={rep['odd_hits']}")


def test_06_intermingled_basins(K):
    t0 = time.time()
    g = classify_basins(K, shape=(64, 64, 17), n=5000, delta=0.05, seed=0,
                        threads=1)
    dt = time.time() - t0
    rep = intermingled_test(g, coarse=(8, 8, 4), min_fraction=0.01)
    c = g.counts()
    ok = (g.decided_fraction() >= 0.99
          and c["TORUS0"] > 0 and c["TORUS1"] > 0
          and rep["fraction_with_both"] >= 0.95)
    _line(6, "intermingled basins", ok,
          f"decided={g.decided_fraction():.4f} counts={c} "
          f"coarse_both={rep['fraction_with_both']:.4f} runtime={dt / 60:.1f}min")


def test_07_torus_lyapunov(K, verify_01):
    rng = stream(0, 901)
    oks, details = [], []
    for level in (0, 1):
        x = np.column_stack([rng.random((1, 2)), [[float(level)]]])
        lam = float(center_lyapunov(K, x, 1_000_000)[0])
        quad = verify_01["K4"][f"torus{level}"]["integral"]
        rel = abs(lam - quad) / abs(quad)
        oks.append(lam < 0 and rel <= 0.05)
        details.append(f"torus{level}: orbit={lam:.5f} quad={quad:.5f} rel={rel:.3%}")
    _line(7, "center Lyapunov exponents on the tori", all(oks),
          "; ".join(details))


def test_08_gibbs_u_state_proxy(K):
    seed_pt = np.array([0.31, 0.41, 0.1])
    m2000 = push_u_disk(K, seed_pt, n=2000, n_samples=400)
    m200 = push_u_disk(K, seed_pt, n=200, n_samples=400)
    mass = m2000.mass_near_torus(0, 0.05) + m2000.mass_near_torus(1, 0.05)
    d2000 = invariance_defect(K, m2000)
    d200 = invariance_defect(K, m200)
    ok = mass >= 0.90 and d2000 <= 0.05 and d2000 < d200
    _line(8, "u-disk push-forward proxy", ok,
          f"tube mass={mass:.4f} defect(2000)={d2000:.4f} defect(200)={d200:.4f}")


def test_09_perturbation_dichotomy(K):
    P = break_torus(K, 0.02, which=0)
    broken = su_torus_status(P, 0)
    intact = su_torus_status(P, 1)
    ok = broken["status"] == "Broken" and intact["status"] == "Continuation"
    details = [f"eta=0.02: torus0={broken['status']} torus1={intact['status']}"]

    t0 = time.time()
    g = classify_basins(P, shape=(64, 64, 17), n=5000, delta=0.05, seed=0,
                        threads=1)
    c = g.counts()
    decided = c["TORUS0"] + c["TORUS1"]
    share1 = c["TORUS1"] / max(decided, 1)
    ok &= share1 >= 0.99
    details.append(f"TORUS1 share of decided={share1:.4f} counts={c} "
                   f"runtime={(time.time() - t0) / 60:.1f}min")

    table = mixing_diagnostic(P, standard_region_pairs(), n_max=64,
                              n_samples=10_000, seed=0)
    window = table["hits"][:, 15:64]  # steps 16..64 inclusive
    ok &= bool(np.all(window))
    details.append(f"hits 16..64 all pairs={bool(np.all(window))}")

    # eta = 0 leg: both tori continue and the basin labels are unchanged
    P0 = break_torus(K, 0.0, which=0)
    s0 = su_torus_status(P0, 0)
    s1 = su_torus_status(P0, 1)
    ok &= s0["status"] == "Continuation" and s1["status"] == "Continuation"
    g_ref = classify_basins(K, shape=(16, 16, 5), n=400, seed=0)
    g_eta0 = classify_basins(P0, shape=(16, 16, 5), n=400, seed=0)
    ok &= np.array_equal(g_ref.labels, g_eta0.labels)
    details.append(f"eta=0: torus0={s0['status']} torus1={s1['status']} "
                   f"labels unchanged={np.array_equal(g_ref.labels, g_eta0.labels)}")
    _line(9, "torus-breaking dichotomy", ok, "; ".join(details))


def test_10_manifold_density(K):
    oks, details = [], []
    for name in ("fiber_forward", "fiber_backward"):
        rep = manifold_coverage(K, name, depth=12, grid=(16, 16, 8),
                                budget=10_000_000)
        oks.append(rep.fraction == 1.0 and not rep.budget_exhausted)
        details.append(f"{name}: fraction={rep.fraction:.3f} "
                       f"depth={rep.depth_reached} budget={rep.budget_used}")
    _line(10, "invariant-manifold density", all(oks), "; ".join(details))


def test_11_thread_determinism(tmp_path):
    # same seed, thread counts {1, 4, 8}: identical report payload hashes
    # for the dichotomy, basin, and perturbation pipelines (basin grids
    # reduced; chunked classification makes size irrelevant to the property)
    hashes = {}
    for threads in (1, 4, 8):
        cfg = ExperimentConfig(threads=threads,
                               out_dir=str(tmp_path / f"t{threads}"),
                               basin_shape=(16, 16, 5), basin_n=400,
                               dichotomy_samples=2000,
                               mixing_nmax=16, mixing_samples=2000)
        for exp in ("blender", "basin", "perturb"):
            man = run_report(cfg, exp)
            hashes.setdefault(exp, []).append(man.payload_sha256)
    ok = all(len(set(v)) == 1 for v in hashes.values())
    _line(11, "thread-count determinism", ok,
          "; ".join(f"{k}: {v[0][:12]} x{len(v)}" for k, v in hashes.items()))
