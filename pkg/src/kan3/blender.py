"""Affine blender-horseshoe model and its checkable certificates.

The model is the exactly-affine 2 n0-step return of the skew product over
the homoclinic strip, written in chart coordinates (x_s, x_u, x_c) on the
reference cube Gamma = [-2, 2]^3:

    branch 1:  (x_s / L, L x_u,       mu x_c)
    branch 2:  (x_s / L + 1, L (x_u - 1), mu (x_c - 1) + 1)

with L = lambda^{2 n0} the base multiplier and mu > 1 the center multiplier.
Branch boxes are the exact preimages of Gamma.  The module certifies the
geometric blender conditions (two crossing components, boundary
disjointness, cone invariance), runs the strip-width dichotomy (every
center interval either grows by exactly mu or its image crosses the local
stable plane of P), and cross-checks the model against the realized map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInterval, OutOfWindow, OutsideBranches, TooFewSamples

Array = np.ndarray

DEFAULT_LAMBDA_POW = float((3.0 + 2.0 * np.sqrt(2.0)) ** 6)
DEFAULT_MU = float(np.exp(0.6))


def _box_contains(box: Array, pts: Array) -> Array:
    return np.all((pts >= box[:, 0]) & (pts <= box[:, 1]), axis=-1)


@dataclass(frozen=True)
class BlenderModel:
    """Two-branch affine model on the cube [-2, 2]^3."""

    lambda_pow: float = DEFAULT_LAMBDA_POW
    mu: float = DEFAULT_MU
    eps0: float = 0.1
    half: float = 2.0

    def __post_init__(self):
        if self.lambda_pow <= 0 or self.mu <= 0 or self.eps0 <= 0:
            raise ValueError("lambda_pow, mu, eps0 must be positive")

    @property
    def nu(self) -> float:
        return self.mu - 1.0

    @property
    def lam_prime(self) -> float:
        return (self.mu + 1.0) / 2.0

    @property
    def saddle_p(self) -> Array:
        return np.zeros(3)

    @property
    def saddle_o(self) -> Array:
        r = 1.0 / (1.0 - 1.0 / self.lambda_pow)
        return np.array([r, r, 1.0])

    @property
    def cube(self) -> Array:
        h = self.half
        return np.array([[-h, h]] * 3)

    @property
    def gamma1(self) -> Array:
        """Exact preimage of the cube under branch 1, intersected with it."""
        h, L, mu = self.half, self.lambda_pow, self.mu
        return np.array([
            [-h, h],
            [max(-h, -h / L), min(h, h / L)],
            [max(-h, -h / mu), min(h, h / mu)],
        ])

    @property
    def gamma2(self) -> Array:
        h, L, mu = self.half, self.lambda_pow, self.mu
        return np.array([
            [-h, h],
            [max(-h, 1.0 - h / L), min(h, 1.0 + h / L)],
            [max(-h, 1.0 - (h + 1.0) / mu), min(h, 1.0 + (h - 1.0) / mu)],
        ])

    def branch(self, pts: Array, which: int) -> Array:
        pts = np.asarray(pts, dtype=float)
        L, mu = self.lambda_pow, self.mu
        out = np.empty_like(pts)
        if which == 1:
            out[..., 0] = pts[..., 0] / L
            out[..., 1] = L * pts[..., 1]
            out[..., 2] = mu * pts[..., 2]
        else:
            out[..., 0] = pts[..., 0] / L + 1.0
            out[..., 1] = L * (pts[..., 1] - 1.0)
            out[..., 2] = mu * (pts[..., 2] - 1.0) + 1.0
        return out


def model_map(m: BlenderModel, pts: Array) -> Array:
    """Apply the branch map; every point must be in a branch box."""
    pts = np.asarray(pts, dtype=float)
    single = pts.ndim == 1
    p = pts[None, :] if single else pts
    in1 = _box_contains(m.gamma1, p)
    in2 = _box_contains(m.gamma2, p) & ~in1
    if not np.all(in1 | in2):
        raise OutsideBranches(
            f"{int(np.count_nonzero(~(in1 | in2)))} point(s) outside both branch boxes"
        )
    out = np.empty_like(p)
    out[in1] = m.branch(p[in1], 1)
    out[in2] = m.branch(p[in2], 2)
    return out[0] if single else out


def certify_geometry(m: BlenderModel) -> dict:
    """Exact box arithmetic checks of the crossing geometry."""
    h, L, mu = m.half, m.lambda_pow, m.mu
    g1, g2 = m.gamma1, m.gamma2

    # two components: the branch images are slabs separated in the
    # strong-stable coordinate, each spanning the cube fully in the
    # expanding u and center directions (images collapse inside when the
    # center multiplier is not expanding)
    s1 = (-h / L, h / L)
    s2 = (1.0 - h / L, 1.0 + h / L)
    slabs_disjoint = s1[1] < s2[0] or s2[1] < s1[0]
    spans_u = (g1[1, 1] - g1[1, 0]) * L >= 2 * h - 1e-12 and \
              (g2[1, 1] - g2[1, 0]) * L >= 2 * h - 1e-12
    c1_img = (mu * g1[2, 0], mu * g1[2, 1])
    c2_img = (mu * (g2[2, 0] - 1.0) + 1.0, mu * (g2[2, 1] - 1.0) + 1.0)
    spans_c = c1_img[0] <= -h + 1e-12 and c1_img[1] >= h - 1e-12 and \
              c2_img[0] <= -h + 1e-12 and c2_img[1] >= h - 1e-12
    two_components = bool(slabs_disjoint and spans_u and spans_c)

    # branch boxes stay off the u-boundary of the cube and are disjoint
    off_u_boundary = bool(-h < g1[1, 0] and g1[1, 1] < h
                          and -h < g2[1, 0] and g2[1, 1] < h)
    boxes_disjoint = bool(g1[1, 1] < g2[1, 0] or g2[1, 1] < g1[1, 0])

    # branch images stay off the strong-stable boundary
    s_img = h / L
    off_ss_boundary = bool(-h < -s_img and s_img < h and L > 1.0)

    report = {
        "two_components": two_components,
        "off_u_boundary": off_u_boundary,
        "branch_boxes_disjoint": boxes_disjoint,
        "off_ss_boundary": off_ss_boundary,
        "center_windows": {"branch1": list(g1[2]), "branch2": list(g2[2])},
    }
    report["ok"] = bool(two_components and off_u_boundary
                        and boxes_disjoint and off_ss_boundary)
    return report


def certify_cones(m: BlenderModel, eps0: float | None = None) -> bool:
    """Strict cone invariance and rate bounds for the diagonal differential.

    Both branch differentials equal diag(1/L, L, mu), so the conditions are
    closed-form inequalities: strict invariance factors < 1 for the
    strong-unstable, unstable, and (under the inverse) strong-stable cones,
    expansion by at least lam' = (mu + 1)/2 inside the unstable cone, and
    cones narrow enough to be mutually transverse.
    """
    if eps0 is None:
        eps0 = m.eps0
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    L, mu = m.lambda_pow, m.mu
    a_s = 1.0 / L
    if eps0 >= 1.0:
        return False
    q_uu = max(a_s, mu) / L
    q_u = a_s / min(L, mu)
    q_ss = max(1.0 / L, 1.0 / mu) / L
    slack = np.sqrt(1.0 + eps0 **2)
    grow_u = min(L, mu) / slack
    grow_s_inv = L / slack
    return bool(
        q_uu < 1.0 and q_u < 1.0 and q_ss < 1.0
        and grow_u >= m.lam_prime and grow_s_inv > 1.0
    )


# ---------------------------------------------------------------------------
# strip-width dichotomy


@dataclass(frozen=True)
class CenterInterval:
    """Center-coordinate footprint [a, b] of a vertical strip."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise InvalidInterval(f"need a < b, got [{self.a}, {self.b}]")

    @property
    def width(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class StripOutcome:
    status: str  # "Grown" or "HitsP"
    interval: CenterInterval | None = None
    image: tuple | None = None


def strip_step(m: BlenderModel, interval: CenterInterval) -> StripOutcome:
    """One return-map step on a center interval strictly inside (0, 1)."""
    a, b = interval.a, interval.b
    if not (0.0 < a and b < 1.0):
        raise InvalidInterval(f"[{a}, {b}] not inside (0, 1)")
    mu = m.mu
    if b <= 1.0 / mu:
        return StripOutcome("Grown", CenterInterval(mu * a, mu * b))
    a2 = mu * (a - 1.0) + 1.0
    b2 = mu * (b - 1.0) + 1.0
    if a2 >= 0.0:
        return StripOutcome("Grown", CenterInterval(a2, b2))
    return StripOutcome("HitsP", image=(a2, b2))


def termination_bound(m: BlenderModel, width: float) -> int:
    """Worst-case step count before an interval of this width hits P."""
    target = 1.0 - 1.0 / m.mu
    if width >= target:
        return 2
    return int(np.ceil(np.log(target / width) / np.log(m.mu))) + 2


def verify_dichotomy(m: BlenderModel, n_samples: int = 10_000,
                     max_iter: int | None = None, rng_seed: int = 0,
                     w_min: float = 1e-6, w_max: float = 0.3) -> dict:
    """Random-interval suite for the grow-or-hit dichotomy."""
    from .rng import stream

    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = stream(rng_seed, 202)
    widths = np.exp(rng.uniform(np.log(w_min), np.log(w_max), n_samples))
    starts = rng.uniform(0.0, 1.0, n_samples) * (1.0 - widths)
    starts = np.clip(starts, 1e-12, None)
    hard_cap = max_iter if max_iter is not None else termination_bound(m, w_min) + 8

    failures = []
    max_steps = 0
    ratio_lo, ratio_hi = np.inf, -np.inf
    for k in range(n_samples):
        iv = CenterInterval(float(starts[k]), float(starts[k] + widths[k]))
        bound = termination_bound(m, iv.width)
        steps = 0
        hit = False
        while steps < hard_cap:
            out = strip_step(m, iv)
            steps += 1
            if out.status == "HitsP":
                hit = True
                break
            ratio = out.interval.width / iv.width
            ratio_lo = min(ratio_lo, ratio)
            ratio_hi = max(ratio_hi, ratio)
            if not ratio >= m.lam_prime:
                failures.append({"sample": k, "reason": "slow growth",
                                 "ratio": ratio})
            iv = out.interval
        max_steps = max(max_steps, steps)
        if not hit:
            failures.append({"sample": k, "reason": "no HitsP",
                             "steps": steps})
        elif steps > bound:
            failures.append({"sample": k, "reason": "over bound",
                             "steps": steps, "bound": bound})
    return {
        "n_samples": n_samples,
        "max_steps": max_steps,
        "grown_ratio_min": float(ratio_lo),
        "grown_ratio_max": float(ratio_hi),
        "lam_prime": m.lam_prime,
        "n_failures": len(failures),
        "failures": failures[:20],
        "ok": len(failures) == 0,
    }


def superposition_member(m: BlenderModel, segment: Array,
                         eps0: float | None = None) -> bool:
    """Is a sampled curve an in-between vertical disk of the model?

    True iff all tangent samples lie in the strong-unstable cone, the curve
    spans the cube in the expanding direction, and its center footprint is
    strictly inside (0, 1).
    """
    if eps0 is None:
        eps0 = m.eps0
    seg = np.asarray(segment, dtype=float)
    if seg.ndim != 2 or seg.shape[0] < 2 or seg.shape[1] != 3:
        raise TooFewSamples("need an (N, 3) array with N >= 2")
    diffs = np.diff(seg, axis=0)
    du = np.abs(diffs[:, 1])
    dsc = np.hypot(diffs[:, 0], diffs[:, 2])
    in_cone = bool(np.all(dsc <= eps0 * du))
    u = seg[:, 1]
    spans = bool(min(u[0], u[-1]) <= -m.half + 1e-9
                 and max(u[0], u[-1]) >= m.half - 1e-9)
    footprint = bool(np.all((seg[:, 2] > 0.0) & (seg[:, 2] < 1.0)))
    return in_cone and spans and footprint


# ---------------------------------------------------------------------------
# consistency with the realized map


def model_from_kan(K) -> BlenderModel:
    """The affine model realized by K's 2 n0-step return over the strip."""
    return BlenderModel(lambda_pow=float(K.anosov.lam ** (2 * K.n0)), mu=K.mu)


def consistency_with_kan(K, m: BlenderModel, n_samples: int = 1000,
                         seed: int = 0) -> float:
    """Sup-norm gap between K^{2 n0} in chart coordinates and model_map.

    Samples both branch boxes inside the center plateau window and pushes
    each point through the full nonlinear map.
    """
    from .rng import stream

    if abs(m.mu - K.mu) > 1e-9 * max(1.0, K.mu):
        raise OutOfWindow(f"model mu {m.mu} does not match the map's {K.mu}")
    if abs(m.lambda_pow - K.anosov.lam ** (2 * K.n0)) > 1e-6 * m.lambda_pow:
        raise OutOfWindow("model base multiplier does not match the chart")
    ch = K.chart
    rng = stream(seed, 303)
    sup = 0.0
    for which, box in ((1, m.gamma1), (2, m.gamma2)):
        n = n_samples // 2
        pts = rng.uniform(box[:, 0], box[:, 1], (n, 3))
        base = ch.from_chart(pts[:, :2])
        th = K.xc_to_theta(pts[:, 2])
        cur = np.column_stack([base, th])
        for _ in range(2 * K.n0):
            cur = K.step(cur)
        got = np.column_stack([ch.to_chart(cur[:, :2]),
                               K.theta_to_xc(cur[:, 2])])
        want = m.branch(pts, which)
        sup = max(sup, float(np.max(np.abs(got - want))))
    return sup
