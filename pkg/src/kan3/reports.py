"""Experiment runners: structured JSON reports, CSV tables, PPM/PNG images.

Each experiment writes its outputs into the configured directory and
returns a RunManifest whose payload hash covers the CSV and PPM bytes (the
deterministic artifacts); rerunning with the same config and seed must
reproduce that hash bit for bit on any thread count.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import blender, ergodic, figures, ppm
from .config import ExperimentConfig, print_config
from .ergodic import LABEL_NAMES
from .kanmap import (
    KanMap,
    KanParams,
    break_torus,
    su_torus_status,
    verify_kan_conditions,
)

VERSION = "0.1.0"

EXPERIMENTS = ("verify", "blender", "basin", "lyapunov", "gibbs",
               "coverage", "mixing", "perturb")


@dataclass
class RunManifest:
    experiment: str
    config_hash: str
    version: str
    outputs: list
    payload_sha256: str
    timings: dict
    summary: dict
    ok: bool

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def write_csv(path: str, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(v) for v in row) + "\n")


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _make_map(cfg: ExperimentConfig) -> KanMap:
    return KanMap(KanParams(t=cfg.t, matrix=cfg.matrix, n0=cfg.n0,
                            epsilon=cfg.epsilon, theta0=cfg.theta0))


def _payload_hash(out_dir: str, names: list) -> str:
    h = hashlib.sha256()
    for name in sorted(names):
        if name.endswith(".csv") or name.endswith(".ppm"):
            h.update(name.encode())
            with open(os.path.join(out_dir, name), "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


def run(cfg: ExperimentConfig, experiment: str) -> RunManifest:
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}")
    os.makedirs(cfg.out_dir, exist_ok=True)
    t0 = time.time()
    summary, outputs = _RUNNERS[experiment](cfg)
    wall = time.time() - t0

    report_name = f"{experiment}_report.json"
    with open(os.path.join(cfg.out_dir, report_name), "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
    outputs = outputs + [report_name]

    manifest = RunManifest(
        experiment=experiment,
        config_hash=hashlib.sha256(print_config(cfg).encode()).hexdigest(),
        version=VERSION,
        outputs=sorted(outputs),
        payload_sha256=_payload_hash(cfg.out_dir, outputs),
        timings={"wall_seconds": round(wall, 3)},
        summary={"ok": bool(summary.get("ok", False))},
        ok=bool(summary.get("ok", False)),
    )
    with open(os.path.join(cfg.out_dir, f"{experiment}_manifest.json"), "w") as fh:
        fh.write(manifest.to_json())
    return manifest


# ---------------------------------------------------------------------------
# individual experiments


def _run_verify(cfg: ExperimentConfig):
    K = _make_map(cfg)
    rep = verify_kan_conditions(K, base_grid=cfg.verify_grid, seed=cfg.seed)
    rows = [
        ("K1", rep["K1"]["ok"], max(rep["K1"]["err0"], rep["K1"]["err1"])),
        ("K2_r", rep["K2"]["r"]["ok"], rep["K2"]["r"]["mult0"]),
        ("K2_s", rep["K2"]["s"]["ok"], rep["K2"]["s"]["mult0"]),
        ("K3", rep["K3"]["ok"], rep["K3"]["max"]),
        ("K4_torus0", rep["K4"]["torus0"]["ok"], rep["K4"]["torus0"]["integral"]),
        ("K4_torus1", rep["K4"]["torus1"]["ok"], rep["K4"]["torus1"]["integral"]),
    ]
    write_csv(os.path.join(cfg.out_dir, "verify.csv"),
              ["condition", "ok", "value"], rows)
    figures.derivative_range_png(rep, os.path.join(cfg.out_dir, "verify_k3.png"))
    return rep, ["verify.csv", "verify_k3.png"]


def _run_blender(cfg: ExperimentConfig):
    K = _make_map(cfg)
    model = blender.model_from_kan(K)
    geometry = blender.certify_geometry(model)
    cones = blender.certify_cones(model, 0.1)
    dich = blender.verify_dichotomy(model, cfg.dichotomy_samples,
                                    rng_seed=cfg.seed)
    sup_err = blender.consistency_with_kan(K, model, cfg.consistency_samples,
                                           seed=cfg.seed)
    write_csv(os.path.join(cfg.out_dir, "blender_dichotomy.csv"),
              ["quantity", "value"],
              [("n_samples", dich["n_samples"]),
               ("max_steps", dich["max_steps"]),
               ("grown_ratio_min", dich["grown_ratio_min"]),
               ("grown_ratio_max", dich["grown_ratio_max"]),
               ("n_failures", dich["n_failures"]),
               ("consistency_sup_error", sup_err)])
    summary = {
        "mu": model.mu, "lambda_pow": model.lambda_pow,
        "geometry": geometry, "cones_eps0_0.1": cones,
        "dichotomy": {k: v for k, v in dich.items() if k != "failures"},
        "consistency_sup_error": sup_err,
        "ok": bool(geometry["ok"] and cones and dich["ok"] and sup_err <= 1e-6),
    }
    return summary, ["blender_dichotomy.csv"]


def _basin_outputs(cfg: ExperimentConfig, basins, prefix: str):
    outputs = []
    nt = basins.shape[2]
    for k in range(nt):
        name = f"{prefix}_theta{k:02d}.ppm"
        ppm.write_ppm(basins.labels[:, :, k, 0].T, os.path.join(cfg.out_dir, name))
        outputs.append(name)
    csv_name = f"{prefix}_labels.csv"
    nx, ny, _ = basins.shape
    rows = []
    for k in range(nt):
        theta = -1.0 + (2 * k + 1.0) / nt
        for i in range(nx):
            for j in range(ny):
                rows.append((i, j, k, repr(theta),
                             LABEL_NAMES[int(basins.labels[i, j, k, 0])]))
    write_csv(os.path.join(cfg.out_dir, csv_name),
              ["ix", "iy", "itheta", "theta", "label"], rows)
    outputs.append(csv_name)
    png = f"{prefix}_slices.png"
    figures.basin_slices_png(basins, os.path.join(cfg.out_dir, png))
    outputs.append(png)
    return outputs


def _run_basin(cfg: ExperimentConfig, mapping=None, prefix: str = "basin"):
    if mapping is None:
        mapping = _make_map(cfg)
    basins = ergodic.classify_basins(
        mapping, shape=cfg.basin_shape, n=cfg.basin_n, delta=cfg.basin_delta,
        seed=cfg.seed, threads=cfg.threads)
    inter = ergodic.intermingled_test(basins)
    outputs = _basin_outputs(cfg, basins, prefix)
    counts = basins.counts()
    summary = {
        "counts": counts,
        "decided_fraction": basins.decided_fraction(),
        "intermingled": {k: v for k, v in inter.items()
                         if k not in ("frac0", "frac1", "undecided")},
        "ok": bool(basins.decided_fraction() >= 0.99
                   and counts["TORUS0"] > 0 and counts["TORUS1"] > 0
                   and inter["fraction_with_both"] >= 0.95),
    }
    return summary, outputs


def _run_lyapunov(cfg: ExperimentConfig):
    K = _make_map(cfg)
    from .rng import stream

    rng = stream(cfg.seed, 707)
    rep = verify_kan_conditions(K, base_grid=cfg.verify_grid, seed=cfg.seed)
    rows = []
    summary = {"k4": rep["K4"], "exponents": {}}
    ok = True
    for level in (0, 1):
        x = np.array([rng.random(), rng.random(), float(level)])
        lam = ergodic.center_lyapunov(K, x, cfg.lyapunov_n)
        quad = rep["K4"][f"torus{level}"]["integral"]
        rel = abs(lam - quad) / abs(quad)
        ok = ok and lam < 0 and rel <= 0.05
        summary["exponents"][f"torus{level}"] = {
            "orbit_estimate": lam, "quadrature": quad, "rel_error": rel}
        rows.append((level, lam, quad, rel))
    write_csv(os.path.join(cfg.out_dir, "lyapunov.csv"),
              ["torus", "orbit_estimate", "quadrature", "rel_error"], rows)
    summary["ok"] = bool(ok)
    return summary, ["lyapunov.csv"]


def _run_gibbs(cfg: ExperimentConfig):
    K = _make_map(cfg)
    from .rng import stream

    rng = stream(cfg.seed, 808)
    seed_pt = np.array([rng.random(), rng.random(), rng.uniform(-1, 1)])
    rows = []
    summary = {"runs": {}}
    measures = {}
    for n in (200, cfg.gibbs_n):
        m = ergodic.push_u_disk(K, seed_pt, n=n, n_samples=cfg.gibbs_samples)
        mass = (m.mass_near_torus(0, 0.05) + m.mass_near_torus(1, 0.05))
        defect = ergodic.invariance_defect(K, m)
        measures[n] = m
        summary["runs"][str(n)] = {"tube_mass": mass, "tv_defect": defect}
        rows.append((n, mass, defect))
    write_csv(os.path.join(cfg.out_dir, "gibbs.csv"),
              ["n", "tube_mass", "tv_defect"], rows)
    m_final = measures[cfg.gibbs_n]
    figures.theta_histogram_png(m_final.points, m_final.weights,
                                os.path.join(cfg.out_dir, "gibbs_theta.png"))
    final = summary["runs"][str(cfg.gibbs_n)]
    first = summary["runs"]["200"]
    summary["ok"] = bool(final["tube_mass"] >= 0.9
                         and final["tv_defect"] <= 0.05
                         and final["tv_defect"] < first["tv_defect"])
    return summary, ["gibbs.csv", "gibbs_theta.png"]


def _run_coverage(cfg: ExperimentConfig):
    K = _make_map(cfg)
    rows = []
    outputs = ["coverage.csv"]
    summary = {"objects": {}}
    ok = True
    for name in ("fiber_forward", "fiber_backward"):
        rep = ergodic.manifold_coverage(
            K, name, depth=cfg.coverage_depth, grid=cfg.coverage_grid,
            budget=cfg.coverage_budget)
        png = f"coverage_{name}.png"
        figures.coverage_png(rep, os.path.join(cfg.out_dir, png))
        outputs.append(png)
        summary["objects"][name] = {
            "fraction": rep.fraction, "depth_reached": rep.depth_reached,
            "budget_used": rep.budget_used,
            "budget_exhausted": rep.budget_exhausted}
        rows.append((name, rep.fraction, rep.depth_reached, rep.budget_used))
        ok = ok and rep.fraction == 1.0
    write_csv(os.path.join(cfg.out_dir, "coverage.csv"),
              ["object", "fraction", "depth", "budget_used"], rows)
    summary["ok"] = bool(ok)
    return summary, outputs


def _run_mixing(cfg: ExperimentConfig):
    K = _make_map(cfg)
    cert = ergodic.nonmixing_certificate(K, seed=cfg.seed)
    pairs = ergodic.standard_region_pairs()
    table = ergodic.mixing_diagnostic(K, pairs, n_max=cfg.mixing_nmax,
                                      n_samples=cfg.mixing_samples,
                                      seed=cfg.seed)
    hits = table["hits"]
    write_csv(os.path.join(cfg.out_dir, "mixing_hits.csv"),
              ["pair"] + [f"n{n}" for n in range(1, hits.shape[1] + 1)],
              [(k, *map(int, hits[k])) for k in range(len(hits))])
    figures.hit_matrix_png(hits, os.path.join(cfg.out_dir, "mixing_hits.png"))
    summary = {
        "nonmixing_certificate": cert,
        "n_pairs": len(pairs),
        "ok": bool(cert["ok"]),
    }
    return summary, ["mixing_hits.csv", "mixing_hits.png"]


def _run_perturb(cfg: ExperimentConfig):
    K = _make_map(cfg)
    g = break_torus(K, cfg.eta, which=cfg.which_torus)
    st_broken = su_torus_status(g, cfg.which_torus)
    st_other = su_torus_status(g, 1 - cfg.which_torus)

    basin_summary, outputs = _run_basin(cfg, mapping=g, prefix="perturb_basin")
    counts = basin_summary["counts"]
    decided = counts["TORUS0"] + counts["TORUS1"]
    surviving = f"TORUS{1 - cfg.which_torus}"
    surviving_frac = counts[surviving] / decided if decided else 0.0

    pairs = ergodic.standard_region_pairs()
    table = ergodic.mixing_diagnostic(g, pairs, n_max=cfg.mixing_nmax,
                                      n_samples=cfg.mixing_samples,
                                      seed=cfg.seed)
    hits = table["hits"]
    hits_16_64 = bool(hits[:, 15:].all())
    write_csv(os.path.join(cfg.out_dir, "perturb_mixing.csv"),
              ["pair"] + [f"n{n}" for n in range(1, hits.shape[1] + 1)],
              [(k, *map(int, hits[k])) for k in range(len(hits))])
    outputs = outputs + ["perturb_mixing.csv"]

    summary = {
        "eta": cfg.eta,
        "which_torus": cfg.which_torus,
        "status_broken_torus": st_broken,
        "status_other_torus": st_other,
        "basins": basin_summary,
        "surviving_label_fraction_of_decided": surviving_frac,
        "mixing_hits_16_64": hits_16_64,
        "ok": bool(st_broken["status"] == "Broken"
                   and st_other["status"] == "Continuation"
                   and surviving_frac >= 0.99 and hits_16_64),
    }
    return summary, outputs


_RUNNERS = {
    "verify": _run_verify,
    "blender": _run_blender,
    "basin": _run_basin,
    "lyapunov": _run_lyapunov,
    "gibbs": _run_gibbs,
    "coverage": _run_coverage,
    "mixing": _run_mixing,
    "perturb": _run_perturb,
}
