"""Measure-theoretic and topological diagnostics for the skew product.

Birkhoff averages, center Lyapunov exponents along fiber tangents, u-disk
push-forwards (the empirical route to the two physical measures on the
boundary tori), basin classification with the intermingling test, invariant
manifold coverage, and the mixing / non-mixing first-hit tables.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExhausted
from .kanmap import KanMap, dist_to_torus, wrap2
from .rng import stream
from .torus import torus_dist

Array = np.ndarray

TORUS0, TORUS1, UNDECIDED = 0, 1, 2
LABEL_NAMES = {TORUS0: "TORUS0", TORUS1: "TORUS1", UNDECIDED: "UNDECIDED"}


def point_dist(a: Array, b: Array) -> Array:
    """Distance on T^2 x (R/2Z) (sup of base and fiber distances)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    db = torus_dist(a[..., :2], b[..., :2])
    dth = np.abs(wrap2(a[..., 2] - b[..., 2]))
    dth = np.minimum(dth, 2.0 - dth)
    return np.maximum(db, dth)


# ---------------------------------------------------------------------------
# Birkhoff averages and center exponents


def birkhoff(mapping, x0: Array, observable, n: int) -> Array:
    """(1/n) sum of observable over the first n orbit points."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = np.atleast_2d(np.asarray(x0, dtype=float))
    total = np.zeros(len(pts))
    for _ in range(n):
        total += observable(pts)
        pts = mapping.step(pts)
    out = total / n
    return float(out[0]) if np.asarray(x0).ndim == 1 else out


def center_lyapunov(mapping, x0: Array, n: int) -> Array:
    """Orbit average of log |d theta' / d theta| (fiber tangent = center).

    Seeds lying exactly on an invariant torus of an unperturbed map use the
    exact endpoint rates (log-derivative = t * rate there), with the base
    orbit advanced in bulk; this is what makes n = 10^6 runs cheap.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = np.atleast_2d(np.asarray(x0, dtype=float))
    single = np.asarray(x0).ndim == 1
    th = wrap2(pts[:, 2])
    on_torus = np.all((th == 0.0) | (th == 1.0) | (th == -1.0))
    if on_torus and isinstance(mapping, KanMap):
        out = _torus_lyapunov(mapping, pts, n)
        return float(out[0]) if single else out
    total = np.zeros(len(pts))
    for _ in range(n):
        pts, ld = mapping.step(pts, logderiv=True)
        total += ld
    out = total / n
    return float(out[0]) if single else out


def _torus_lyapunov(K: KanMap, pts: Array, n: int, chunk: int = 8192) -> Array:
    level = np.where(wrap2(pts[:, 2]) == 0.0, 0, 1)
    base = pts[:, :2].copy()
    mat = K.anosov.matrix.astype(float)
    total = np.zeros(len(pts))
    buf = np.empty((chunk, len(pts), 2))
    done = 0
    while done < n:
        m = min(chunk, n - done)
        for i in range(m):
            buf[i] = base
            base = (base @ mat.T) % 1.0
        for lv in (0, 1):
            sel = level == lv
            if np.any(sel):
                rates = K.endpoint_rate(buf[:m, sel, :], lv)
                total[sel] += K.t * np.sum(rates, axis=0)
        done += m
    return total / n


# ---------------------------------------------------------------------------
# u-disk push-forward (empirical physical measures)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted point cloud; weights sum to one."""

    points: Array
    weights: Array
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0) or abs(float(np.sum(w)) - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")

    def mass_near_torus(self, level: int, delta: float) -> float:
        d = dist_to_torus(self.points[:, 2], level)
        return float(np.sum(self.weights[d <= delta]))


def unstable_direction(mapping, x: Array, n_power: int = 30,
                       tol: float = 1e-10, h: float = 1e-7) -> Array:
    """Strong-unstable direction at x by power iteration along the orbit.

    Pushes a generic tangent vector with finite-difference differentials
    from the n_power-fold preimage of x back up to x, renormalizing.
    """
    x = np.asarray(x, dtype=float)
    pre = x[None, :].copy()
    back = min(n_power, 60)
    for _ in range(back):
        pre = mapping.step_inv(pre)
    v = np.array([1.0, 0.3, 0.2])
    v /= np.linalg.norm(v)
    prev = v.copy()
    cur = pre
    for k in range(back):
        plus = mapping.step(cur + 0.5 * h * v[None, :])
        minus = mapping.step(cur - 0.5 * h * v[None, :])
        dv = (plus - minus)[0]
        dv[:2] = np.mod(dv[:2] + 0.5, 1.0) - 0.5  # shortest representatives
        dv[2] = wrap2(dv[2])
        v = dv / np.linalg.norm(dv)
        cur = mapping.step(cur)
        if k >= back - 5 and np.linalg.norm(np.abs(v) - np.abs(prev)) < tol:
            break
        prev = v.copy()
    return v


def push_u_disk(mapping, seed: Array, u_length: float = 0.2, n: int = 200,
                n_samples: int = 400) -> EmpiricalMeasure:
    """Empirical average (1/n) sum of push-forwards of Lebesgue on a u-segment."""
    if u_length <= 0:
        raise ValueError("u_length must be positive")
    seed = np.asarray(seed, dtype=float)
    direction = unstable_direction(mapping, seed)
    s = (np.arange(n_samples) + 0.5) / n_samples - 0.5
    pts = seed[None, :] + (u_length * s)[:, None] * direction[None, :]
    pts[:, :2] = np.mod(pts[:, :2], 1.0)
    pts[:, 2] = wrap2(pts[:, 2])
    w_seg = np.full(n_samples, 1.0 / n_samples)  # uniform arc length

    all_pts = np.empty((n * n_samples, 3))
    all_w = np.empty(n * n_samples)
    cur = pts
    for i in range(n):
        all_pts[i * n_samples:(i + 1) * n_samples] = cur
        all_w[i * n_samples:(i + 1) * n_samples] = w_seg / n
        if i < n - 1:
            cur = mapping.step(cur)
    all_w /= np.sum(all_w)
    return EmpiricalMeasure(all_pts, all_w,
                            {"seed": seed.tolist(), "u_length": u_length,
                             "n": n, "n_samples": n_samples})


def push_measure(mapping, m: EmpiricalMeasure) -> EmpiricalMeasure:
    return EmpiricalMeasure(mapping.step(m.points), m.weights,
                            dict(m.provenance, pushed=True))


def tv_binned(m1: EmpiricalMeasure, m2: EmpiricalMeasure,
              bins: tuple = (16, 16, 16)) -> float:
    """Total-variation distance between binned versions of two measures."""
    def hist(m):
        ix = np.minimum((m.points[:, 0] % 1.0) * bins[0], bins[0] - 1).astype(int)
        iy = np.minimum((m.points[:, 1] % 1.0) * bins[1], bins[1] - 1).astype(int)
        it = np.minimum((wrap2(m.points[:, 2]) + 1.0) / 2.0 * bins[2],
                        bins[2] - 1).astype(int)
        flat = (ix * bins[1] + iy) * bins[2] + it
        return np.bincount(flat, weights=m.weights,
                           minlength=bins[0] * bins[1] * bins[2])

    return 0.5 * float(np.sum(np.abs(hist(m1) - hist(m2))))


def invariance_defect(mapping, m: EmpiricalMeasure,
                      bins: tuple = (16, 16, 16)) -> float:
    return tv_binned(m, push_measure(mapping, m), bins)


# ---------------------------------------------------------------------------
# basin classification


@dataclass(frozen=True)
class BasinGrid:
    shape: tuple                 # (n_x, n_y, n_theta)
    labels: Array                # int8 (n_x, n_y, n_theta, samples_per_cell)
    n: int
    tail: int
    delta: float
    seed: int

    def counts(self) -> dict:
        flat = self.labels.ravel()
        return {LABEL_NAMES[k]: int(np.count_nonzero(flat == k))
                for k in (TORUS0, TORUS1, UNDECIDED)}

    def decided_fraction(self) -> float:
        flat = self.labels.ravel()
        return float(np.count_nonzero(flat != UNDECIDED) / flat.size)


def grid_points(shape: tuple, seed: int, samples_per_cell: int = 1) -> Array:
    """Deterministic sample points: cell centers, then seeded jitter.

    theta levels are the centers of n_theta cells of [-1, 1); for odd
    n_theta the middle level is exactly 0, so the invariant-torus row is
    represented exactly.  Sample 0 of each cell is the exact center; extra
    samples jitter inside the cell with a counter-based stream keyed by the
    flat cell index, making the point set independent of evaluation order.
    """
    nx, ny, nt = shape
    xs = (np.arange(nx) + 0.5) / nx
    ys = (np.arange(ny) + 0.5) / ny
    ts = -1.0 + (2.0 * np.arange(nt) + 1.0) / nt
    gx, gy, gt = np.meshgrid(xs, ys, ts, indexing="ij")
    centers = np.stack([gx, gy, gt], axis=-1).reshape(-1, 3)
    pts = np.repeat(centers, samples_per_cell, axis=0).reshape(
        len(centers), samples_per_cell, 3)
    if samples_per_cell > 1:
        for cell in range(len(centers)):
            rng = stream(seed, 404, cell)
            jit = rng.uniform(-0.5, 0.5, (samples_per_cell, 3))
            jit[0] = 0.0
            pts[cell, :, 0] += jit[:, 0] / nx
            pts[cell, :, 1] += jit[:, 1] / ny
            pts[cell, :, 2] += jit[:, 2] * 2.0 / nt
    return pts.reshape(-1, 3)


def _classify_chunk(mapping, pts: Array, n: int, tail: int, delta: float) -> Array:
    d0 = np.zeros(len(pts))
    d1 = np.zeros(len(pts))
    cur = pts
    for i in range(n):
        cur = mapping.step(cur)
        if i >= n - tail:
            th = cur[:, 2]
            d0 += dist_to_torus(th, 0)
            d1 += dist_to_torus(th, 1)
    d0 /= tail
    d1 /= tail
    out = np.full(len(pts), UNDECIDED, dtype=np.int8)
    out[d0 < delta] = TORUS0
    out[d1 < delta] = TORUS1
    return out


def classify_basins(mapping, shape: tuple = (64, 64, 17), n: int = 5000,
                    tail: int | None = None, delta: float = 0.05,
                    seed: int = 0, samples_per_cell: int = 1,
                    threads: int = 1) -> BasinGrid:
    """Label every grid sample by the torus its orbit tail settles near.

    Work is split into fixed chunks of cells; each chunk is a pure
    vectorized computation, so the labels are bytewise identical for every
    thread count.
    """
    if not delta < 0.25:
        raise ValueError("delta must be < 0.25")
    if tail is None:
        tail = n // 5
    if tail > n:
        raise ValueError("tail must be <= n")
    pts = grid_points(shape, seed, samples_per_cell)
    n_chunks = max(threads * 4, 8)
    chunks = np.array_split(np.arange(len(pts)), n_chunks)

    def work(idx):
        return _classify_chunk(mapping, pts[idx], n, tail, delta)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]
    labels = np.concatenate(results).reshape(*shape, samples_per_cell)
    return BasinGrid(tuple(shape), labels, n, tail, delta, seed)


def intermingled_test(basins: BasinGrid, coarse: tuple = (8, 8, 4),
                      min_fraction: float = 0.01) -> dict:
    """Do both basins show up in every coarse cell of the sampled region?"""
    nx, ny, nt = basins.shape
    cx, cy, ct = coarse
    if nx % cx or ny % cy:
        raise ValueError("coarse cells must tile the base grid")
    lab = basins.labels
    fx, fy = nx // cx, ny // cy
    # theta cells may not divide evenly (17 levels over 4 cells); use floor
    it = np.minimum((np.arange(nt) * ct) // nt, ct - 1)
    frac0 = np.zeros(coarse)
    frac1 = np.zeros(coarse)
    und = np.zeros(coarse)
    for k in range(ct):
        sel = lab[:, :, it == k, :]
        blocks = sel.reshape(cx, fx, cy, fy, -1)
        tot = blocks.shape[1] * blocks.shape[3] * blocks.shape[4]
        frac0[:, :, k] = np.count_nonzero(blocks == TORUS0, axis=(1, 3, 4)) / tot
        frac1[:, :, k] = np.count_nonzero(blocks == TORUS1, axis=(1, 3, 4)) / tot
        und[:, :, k] = np.count_nonzero(blocks == UNDECIDED, axis=(1, 3, 4)) / tot
    both = (frac0 >= min_fraction) & (frac1 >= min_fraction)
    return {
        "coarse": coarse,
        "cells_with_both": int(np.count_nonzero(both)),
        "n_cells": int(both.size),
        "fraction_with_both": float(np.count_nonzero(both) / both.size),
        "min_fraction": min_fraction,
        "undecided_rate": float(1.0 - basins.decided_fraction()),
        "frac0": frac0,
        "frac1": frac1,
        "undecided": und,
    }


# ---------------------------------------------------------------------------
# invariant-manifold coverage


@dataclass
class CoverageReport:
    object_name: str
    grid: tuple
    covered: Array
    fraction: float
    depth_reached: int
    n_points: int
    budget_used: int
    budget_exhausted: bool


COVERAGE_OBJECTS = ("fiber_forward", "fiber_backward",
                    "udisk_forward", "stable_backward")


def _coverage_seed(mapping, name: str, u_length: float, windings: int = 64):
    """Seed curve (parameterized by [0, 1)) and iteration direction.

    The fiber circles over the fixed points are themselves invariant, so
    the density statements concern their local strong-(un)stable
    saturations: fiber x (u-segment of size u_length).  That surface is
    seeded as a tight spiral, which keeps the refinement one-dimensional.
    """
    K = getattr(mapping, "K", mapping)
    p = K.labels["p"]
    q = K.labels["q"]
    if name == "fiber_forward":
        e_u = K.anosov.e_u

        def seed(s):
            b = np.mod(p[None, :] + (u_length * (s - 0.5))[:, None] * e_u, 1.0)
            return np.column_stack([b, wrap2(2.0 * windings * s)])
        return seed, +1, False
    if name == "fiber_backward":
        e_s = K.anosov.e_s

        def seed(s):
            b = np.mod(q[None, :] + (u_length * (s - 0.5))[:, None] * e_s, 1.0)
            return np.column_stack([b, wrap2(2.0 * windings * s)])
        return seed, -1, False
    if name == "udisk_forward":
        e_u = K.anosov.e_u

        def seed(s):
            b = np.mod(p[None, :] + (u_length * (s - 0.5))[:, None] * e_u, 1.0)
            return np.column_stack([b, np.zeros(len(s))])
        return seed, +1, False
    if name == "stable_backward":
        e_s = K.anosov.e_s

        def seed(s):
            b = np.mod(p[None, :] + (u_length * (s - 0.5))[:, None] * e_s, 1.0)
            return np.column_stack([b, np.zeros(len(s))])
        return seed, -1, False
    raise ValueError(f"unknown object {name!r}; pick from {COVERAGE_OBJECTS}")


def _mark(covered: Array, pts: Array) -> None:
    nx, ny, nt = covered.shape
    ix = np.minimum(((pts[:, 0] % 1.0) * nx).astype(int), nx - 1)
    iy = np.minimum(((pts[:, 1] % 1.0) * ny).astype(int), ny - 1)
    it = np.minimum(((wrap2(pts[:, 2]) + 1.0) / 2.0 * nt).astype(int), nt - 1)
    covered[ix, iy, it] = True


def manifold_coverage(mapping, object_name: str, depth: int = 12,
                      grid: tuple = (16, 16, 8), budget: int = 10_000_000,
                      u_length: float = 1.0, n_initial: int = 4096) -> CoverageReport:
    """Coverage fraction of an epsilon-grid by an iterated invariant object.

    Marks the cells visited by every iterate up to `depth`, refining the
    parameterization by midpoint insertion wherever consecutive image
    points are farther apart than half the smallest cell width, until the
    budget of map evaluations runs out or every cell is hit.
    """
    seed_fn, direction, closed = _coverage_seed(mapping, object_name, u_length)
    step = (lambda x: mapping.step(x)) if direction > 0 else \
           (lambda x: mapping.step_inv(x))
    eps = 0.5 * min(1.0 / grid[0], 1.0 / grid[1], 2.0 / grid[2])
    covered = np.zeros(grid, dtype=bool)
    budget_used = 0
    exhausted = False

    params = np.linspace(0.0, 1.0, n_initial, endpoint=closed is False)
    if closed:
        params = (np.arange(n_initial)) / n_initial
    pts = seed_fn(params)
    _mark(covered, pts)
    depth_reached = 0

    for d in range(1, depth + 1):
        if covered.all():
            break
        if budget_used + len(pts) > budget:
            exhausted = True
            break
        pts = step(pts)
        budget_used += len(pts)
        _mark(covered, pts)
        depth_reached = d
        # refine where the image curve has gaps
        while not covered.all():
            nxt = np.roll(pts, -1, axis=0) if closed else pts[1:]
            cur = pts if closed else pts[:-1]
            gaps = point_dist(cur, nxt) > eps
            if not np.any(gaps):
                break
            i = np.nonzero(gaps)[0]
            p_next = params[(i + 1) % len(params)] if closed else params[i + 1]
            p_next = np.where(p_next <= params[i], p_next + 1.0, p_next)
            new_params = ((params[i] + p_next) / 2.0) % 1.0
            cost = len(new_params) * (d + 1)
            if budget_used + cost > budget:
                exhausted = True
                break
            new_pts = seed_fn(new_params)
            _mark(covered, new_pts)
            for _ in range(d):
                new_pts = step(new_pts)
                _mark(covered, new_pts)
            budget_used += cost
            order = np.argsort(np.concatenate([params, new_params]),
                               kind="stable")
            params = np.concatenate([params, new_params])[order]
            pts = np.concatenate([pts, new_pts])[order]
        if exhausted:
            break

    return CoverageReport(
        object_name=object_name, grid=tuple(grid), covered=covered,
        fraction=float(np.count_nonzero(covered) / covered.size),
        depth_reached=depth_reached, n_points=len(pts),
        budget_used=budget_used, budget_exhausted=exhausted,
    )


# ---------------------------------------------------------------------------
# mixing diagnostics


@dataclass(frozen=True)
class Region:
    """Base box x fiber interval; theta_range wraps through +-1 if a > b."""

    base: tuple | None = None        # ((x0, x1), (y0, y1)) or None = all
    theta_range: tuple = (-1.0, 1.0)

    def contains(self, pts: Array) -> Array:
        pts = np.asarray(pts, dtype=float)
        ok = np.ones(pts.shape[:-1], dtype=bool)
        if self.base is not None:
            (x0, x1), (y0, y1) = self.base
            x = pts[..., 0] % 1.0
            y = pts[..., 1] % 1.0
            ok &= (x >= x0) & (x < x1) & (y >= y0) & (y < y1)
        a, b = self.theta_range
        th = wrap2(pts[..., 2])
        if a <= b:
            ok &= (th > a) & (th < b)
        else:
            ok &= (th > a) | (th < b)
        return ok

    def sample(self, rng, n: int) -> Array:
        if self.base is None:
            x = rng.random(n)
            y = rng.random(n)
        else:
            (x0, x1), (y0, y1) = self.base
            x = rng.uniform(x0, x1, n)
            y = rng.uniform(y0, y1, n)
        a, b = self.theta_range
        width = (b - a) if a <= b else (2.0 - (a - b))
        th = wrap2(a + rng.uniform(0.0, width, n))
        return np.column_stack([x, y, th])


def standard_region_pairs() -> list:
    """Eight (U, V) pairs: base quadrants, fibers near the theta = 1 torus."""
    band = (0.7, -0.7)  # dist to the theta=1 torus < 0.3, both sides
    quads = [((0.0, 0.5), (0.0, 0.5)), ((0.5, 1.0), (0.0, 0.5)),
             ((0.0, 0.5), (0.5, 1.0)), ((0.5, 1.0), (0.5, 1.0))]
    pairs = []
    for i in range(4):
        pairs.append((Region(quads[i], band), Region(quads[i], band)))
        pairs.append((Region(quads[i], band), Region(quads[(i + 2) % 4], band)))
    return pairs


def mixing_diagnostic(mapping, pairs: list, n_max: int = 64,
                      n_samples: int = 10_000, seed: int = 0) -> dict:
    """First-hit table: does the iterated sample cloud of U meet V at step n?"""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    hits = np.zeros((len(pairs), n_max), dtype=bool)
    for k, (u, v) in enumerate(pairs):
        rng = stream(seed, 505, k)
        cloud = u.sample(rng, n_samples)
        for n in range(1, n_max + 1):
            cloud = mapping.step(cloud)
            hits[k, n - 1] = bool(np.any(v.contains(cloud)))
    return {"hits": hits, "n_max": n_max, "n_samples": n_samples,
            "n_pairs": len(pairs)}


def nonmixing_certificate(K, n_samples: int = 100_000, n_max: int = 63,
                          seed: int = 0) -> dict:
    """Every point with theta in (0.05, 0.95) flips sign in one step, so the
    upper band never meets itself at odd times."""
    u = Region(None, (0.05, 0.95))
    rng = stream(seed, 506)
    cloud = u.sample(rng, n_samples)
    first = K.step(cloud)
    all_flip = bool(np.all((wrap2(first[:, 2]) > -1.0)
                           & (wrap2(first[:, 2]) < 0.0)))
    table = mixing_diagnostic(K, [(u, u)], n_max=n_max,
                              n_samples=min(n_samples, 10_000), seed=seed)
    odd_hits = table["hits"][0, ::2]  # entries n = 1, 3, 5, ...
    return {"one_step_flip": all_flip,
            "odd_hits": int(np.count_nonzero(odd_hits)),
            "ok": all_flip and not np.any(odd_hits)}
