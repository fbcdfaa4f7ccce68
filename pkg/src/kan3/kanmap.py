"""The skew-product family on T^2 x (R/2Z) and its verification suite.

One generator step is K(x, theta) = (A x, -phi_x(theta)) for theta in [0,1]
and (A x, phi_x(-theta)) for theta in [-1,0], where phi_x is the fiber map
of the doubled-fiber model on [0,1]: the time-t flow of the branch vector
field selected by the base layout, pre-composed with the corrective field
near q and post-composed with an affine correction over the last tube base.
The correction is an exact translation in the linearizing center coordinate
x_c = tan(pi (theta - 1/2)) / s_c, with a wide smooth cutoff; it makes the
2 n0-step return over the strip C2 exactly affine in chart coordinates,
which is what the blender model consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bumps
from .errors import SupportCollision, WindowMismatch
from .fields import (
    KAPPA,
    FieldSpec,
    flow_beta1_sin_2pi,
    flow_beta2,
    flow_sin_2pi,
    flow_sin_pi,
)
from .layout import DomainLayout, build_layout
from .torus import AdaptedChart, AnosovMap, anosov_from_matrix, homoclinic_chart, label_fixed_points, wrap_half

Array = np.ndarray


def wrap2(theta: Array) -> Array:
    """Canonical fiber coordinate in [-1, 1) on R/2Z."""
    return np.mod(np.asarray(theta, dtype=float) + 1.0, 2.0) - 1.0


def dist_to_torus(theta: Array, level: int) -> Array:
    """Distance on R/2Z to the invariant torus at theta = level (0 or 1)."""
    d0 = np.abs(wrap2(theta))
    return d0 if level == 0 else 1.0 - d0


@dataclass(frozen=True)
class KanParams:
    """Resolved parameters of one member of the family."""

    t: float
    matrix: tuple = ((5, 2), (2, 1))
    n0: int | None = 3
    epsilon: float = 0.05
    theta0: float = 0.45
    m_vector: tuple | None = (1, 0)
    label_overrides: dict | None = None

    def __post_init__(self):
        if not (0.0 < self.t <= 0.2):
            raise ValueError(f"t = {self.t} outside (0, 0.2]")


class KanMap:
    """One member K_t of the family, with vectorized point dynamics."""

    def __init__(self, params: KanParams):
        self.params = params
        self.anosov: AnosovMap = anosov_from_matrix(params.matrix)
        self.labels = label_fixed_points(self.anosov, params.label_overrides)
        self.chart: AdaptedChart = homoclinic_chart(
            self.anosov, m=params.m_vector, n0=params.n0
        )
        self.layout: DomainLayout = build_layout(
            self.chart, self.labels, params.epsilon
        )
        self.spec = FieldSpec(epsilon=params.epsilon, theta0=params.theta0)
        self.t = float(params.t)
        self.n0 = self.chart.n0
        self.kappa = KAPPA
        # center multiplier of the 2 n0-step return over the tube
        self.mu = float(np.exp(2 * self.n0 * self.kappa * self.t))
        self.nu = self.mu - 1.0
        # center chart scale: the whole affine window must stay inside the
        # beta1 plateau (|theta - 1/2| < 0.9 eps)
        self.s_c = float(np.tan(0.9 * np.pi * params.epsilon) / (self.mu + 1.5))
        # correction cutoff in x_c: exactly 1 on [mu - 3.5, mu + 1.5],
        # ramps wide enough that 1 - nu * sigma' stays positive
        self._corr_hi1 = self.mu + 1.5
        self._corr_lo1 = self.mu - 3.5
        band = max(10.0 * self.nu, 5.0)
        self._corr_lo0 = self._corr_lo1 - band
        self._corr_hi0 = self._corr_hi1 + band
        if 2.0 * self.nu / band >= 0.5:
            raise WindowMismatch("correction cutoff too steep to stay monotone")
        if self.s_c * (self.mu + 1.5) > np.tan(0.9 * np.pi * params.epsilon) * (1 + 1e-12):
            raise WindowMismatch("affine window escapes the beta1 plateau")
        # K3 feedstock
        self.lam_bounds = self.anosov.norm_bounds

    # --- center coordinate -------------------------------------------------

    def theta_to_xc(self, theta: Array) -> Array:
        return np.tan(np.pi * (np.asarray(theta, dtype=float) - 0.5)) / self.s_c

    def xc_to_theta(self, xc: Array) -> Array:
        return 0.5 + np.arctan(self.s_c * np.asarray(xc, dtype=float)) / np.pi

    def _corr_sigma(self, xc: Array) -> Array:
        return bumps.plateau(xc, self._corr_lo0, self._corr_lo1,
                             self._corr_hi1, self._corr_hi0)

    def _corr_dsigma(self, xc: Array) -> Array:
        return bumps.d_plateau(xc, self._corr_lo0, self._corr_lo1,
                               self._corr_hi1, self._corr_hi0)

    def _correction(self, theta: Array, deriv: bool = False):
        """theta-space form of x_c -> x_c - nu sigma(x_c) (identity near 0,1)."""
        th = np.asarray(theta, dtype=float)
        inner = (th > 1e-9) & (th < 1.0 - 1e-9)
        out = th.copy()
        dd = np.ones_like(th)
        if np.any(inner):
            xc = self.theta_to_xc(th[inner])
            xct = xc - self.nu * self._corr_sigma(xc)
            out[inner] = self.xc_to_theta(xct)
            if deriv:
                num = 1.0 + (self.s_c * xc) ** 2
                den = 1.0 + (self.s_c * xct) ** 2
                dd[inner] = num / den * (1.0 - self.nu * self._corr_dsigma(xc))
        if deriv:
            return out, dd
        return out

    def _correction_inv(self, theta: Array) -> Array:
        th = np.asarray(theta, dtype=float)
        inner = (th > 1e-9) & (th < 1.0 - 1e-9)
        out = th.copy()
        if np.any(inner):
            w = self.theta_to_xc(th[inner])
            x = w.copy()
            for _ in range(200):  # contraction: |nu sigma'| < 0.5
                x_new = w + self.nu * self._corr_sigma(x)
                if np.max(np.abs(x_new - x)) < 1e-13 * (1.0 + np.max(np.abs(x))):
                    x = x_new
                    break
                x = x_new
            out[inner] = self.xc_to_theta(x)
        return out

    # --- fiber map on [0, 1] ----------------------------------------------

    def fiber01(self, base: Array, theta: Array, deriv: bool = False):
        """phi_x(theta) for theta in [0,1], with optional d phi / d theta."""
        base = np.asarray(base, dtype=float)
        th = np.asarray(theta, dtype=float).copy()
        dd = np.ones_like(th)
        lay = self.layout
        t = self.t

        # corrective field near q (applied first; support disjoint from rest)
        a2 = lay.alpha2(base)
        m = a2 > 1e-15
        if np.any(m):
            o, d = flow_beta2(th[m], a2[m], t, self.spec, deriv=True)
            th[m] = o
            dd[m] *= d

        tube_done = np.zeros(th.shape, dtype=bool)
        for i in range(2 * self.n0 - 1, -1, -1):
            mi = lay.uc2_images[i].contains(base) & ~tube_done
            if np.any(mi):
                amp = lay.alpha_tube(base[mi], i)
                o, d = flow_beta1_sin_2pi(th[mi], -amp, t, self.spec, deriv=True)
                th[mi] = o
                dd[mi] *= d
                tube_done |= mi

        mr = lay.in_ur(base) & ~tube_done
        if np.any(mr):
            o, d = flow_sin_pi(th[mr], -lay.alpha_r(base[mr]), t, deriv=True)
            th[mr] = o
            dd[mr] *= d
        ms = lay.in_us(base) & ~tube_done
        if np.any(ms):
            o, d = flow_sin_pi(th[ms], lay.alpha_s(base[ms]), t, deriv=True)
            th[ms] = o
            dd[ms] *= d

        rest = ~(tube_done | mr | ms)
        if np.any(rest):
            amp = lay.alpha_c(base[rest]) + lay.alpha_u2(base[rest])
            o, d = flow_sin_2pi(th[rest], -amp, t, deriv=True)
            th[rest] = o
            dd[rest] *= d

        mc = lay.in_correction_base(base)
        if np.any(mc):
            o, d = self._correction(th[mc], deriv=True)
            th[mc] = o
            dd[mc] *= d

        if deriv:
            return th, dd
        return th

    def fiber01_inv(self, base: Array, w: Array) -> Array:
        """Inverse of phi_x on [0,1]."""
        base = np.asarray(base, dtype=float)
        th = np.asarray(w, dtype=float).copy()
        lay = self.layout
        t = self.t

        mc = lay.in_correction_base(base)
        if np.any(mc):
            th[mc] = self._correction_inv(th[mc])

        tube_done = np.zeros(th.shape, dtype=bool)
        for i in range(2 * self.n0 - 1, -1, -1):
            mi = lay.uc2_images[i].contains(base) & ~tube_done
            if np.any(mi):
                amp = lay.alpha_tube(base[mi], i)
                th[mi] = flow_beta1_sin_2pi(th[mi], -amp, -t, self.spec)
                tube_done |= mi
        mr = lay.in_ur(base) & ~tube_done
        if np.any(mr):
            th[mr] = flow_sin_pi(th[mr], -lay.alpha_r(base[mr]), -t)
        ms = lay.in_us(base) & ~tube_done
        if np.any(ms):
            th[ms] = flow_sin_pi(th[ms], lay.alpha_s(base[ms]), -t)
        rest = ~(tube_done | mr | ms)
        if np.any(rest):
            amp = lay.alpha_c(base[rest]) + lay.alpha_u2(base[rest])
            th[rest] = flow_sin_2pi(th[rest], -amp, -t)

        a2 = lay.alpha2(base)
        m = a2 > 1e-15
        if np.any(m):
            th[m] = flow_beta2(th[m], a2[m], -t, self.spec)
        return np.clip(th, 0.0, 1.0)

    # --- full map on T^2 x R/2Z -------------------------------------------

    def step(self, pts: Array, logderiv: bool = False):
        """Apply K once to an (N, 3) array of points."""
        pts = np.asarray(pts, dtype=float)
        base = pts[..., :2]
        th3 = wrap2(pts[..., 2])
        upper = th3 >= 0.0
        th01 = np.where(upper, th3, -th3)
        if logderiv:
            phi, dd = self.fiber01(base, th01, deriv=True)
        else:
            phi = self.fiber01(base, th01)
        new_base = self.anosov.apply(base)
        new_th = wrap2(np.where(upper, -phi, phi))
        out = np.concatenate([new_base, new_th[..., None]], axis=-1)
        if logderiv:
            return out, np.log(np.abs(dd))
        return out

    def step_inv(self, pts: Array) -> Array:
        pts = np.asarray(pts, dtype=float)
        base = self.anosov.apply_inv(pts[..., :2])
        eta = wrap2(pts[..., 2])
        from_upper = eta <= 0.0  # image of [0,1] is [-1,0]
        w01 = np.where(from_upper, -eta, eta)
        th01 = self.fiber01_inv(base, w01)
        th3 = wrap2(np.where(from_upper, th01, -th01))
        return np.concatenate([base, th3[..., None]], axis=-1)

    def iterate(self, pts: Array, n: int) -> Array:
        out = np.asarray(pts, dtype=float)
        for _ in range(n):
            out = self.step(out)
        return out

    # --- endpoint vertical rates (exact) -----------------------------------

    def endpoint_rate(self, base: Array, level: int) -> Array:
        """d/dtheta of the branch field at theta = level (0 or 1), times alpha.

        log phi'(x, level) = t * endpoint_rate(x, level) exactly, because the
        endpoints are fixed by every branch flow.
        """
        base = np.asarray(base, dtype=float)
        lay = self.layout
        sign = 1.0 if level == 0 else -1.0
        rate = np.zeros(base.shape[:-1], dtype=float)
        tube = lay.in_tube(base)  # beta1 vanishes at the ends: rate 0
        mr = lay.in_ur(base) & ~tube
        ms = lay.in_us(base) & ~tube
        rest = ~(tube | mr | ms)
        rate[mr] = -sign * np.pi * lay.alpha_r(base[mr])
        rate[ms] = sign * np.pi * lay.alpha_s(base[ms])
        amp = lay.alpha_c(base[rest]) + lay.alpha_u2(base[rest])
        rate[rest] = -2.0 * np.pi * amp
        # corrective field: beta2'(0) = beta2'(1) = 1
        rate += lay.alpha2(base)
        return rate


# ---------------------------------------------------------------------------


def make_kan_map(t: float, **kwargs) -> KanMap:
    return KanMap(KanParams(t=t, **kwargs))


def verify_kan_conditions(K: KanMap, base_grid: int = 512, k3_base: int = 96,
                          k3_theta: int = 65, n_k1: int = 4096,
                          seed: int = 0) -> dict:
    """Check the four structural conditions of the family; returns a report."""
    from .rng import stream

    t = K.t
    rep: dict = {"t": t}
    rng = stream(seed, 101)

    # K1: both boundary tori are fixed fiberwise
    bases = rng.random((n_k1, 2))
    e0 = np.max(np.abs(K.fiber01(bases, np.zeros(n_k1))))
    e1 = np.max(np.abs(K.fiber01(bases, np.ones(n_k1)) - 1.0))
    rep["K1"] = {"err0": float(e0), "err1": float(e1), "ok": bool(max(e0, e1) <= 1e-12)}

    # K2: Morse-Smale fiber maps over r and s with multipliers e^{-+ pi t}
    k2 = {}
    grid = np.linspace(0.0, 1.0, 20001)
    for name, sink_at in (("r", 0.0), ("s", 1.0)):
        x = np.tile(K.labels[name], (grid.size, 1))
        phi, dphi = K.fiber01(x, grid, deriv=True)
        h = phi - grid
        interior = (grid > 0) & (grid < 1)
        sign_changes = int(np.count_nonzero(np.diff(np.sign(h[interior])) != 0))
        mult0, mult1 = float(dphi[0]), float(dphi[-1])
        want0 = np.exp(-np.pi * t) if sink_at == 0.0 else np.exp(np.pi * t)
        want1 = np.exp(np.pi * t) if sink_at == 0.0 else np.exp(-np.pi * t)
        k2[name] = {
            "interior_fixed_points": sign_changes,
            "mult0": mult0,
            "mult1": mult1,
            "ok": bool(
                sign_changes == 0
                and abs(mult0 - want0) <= 1e-6
                and abs(mult1 - want1) <= 1e-6
            ),
        }
    rep["K2"] = k2

    # K3: fiber derivative range on a (base x theta) grid
    gx = (np.arange(k3_base) + 0.5) / k3_base
    bx, by = np.meshgrid(gx, gx, indexing="ij")
    bgrid = np.stack([bx.ravel(), by.ravel()], axis=-1)
    thetas = np.linspace(0.0, 1.0, k3_theta)
    dmin, dmax = np.inf, -np.inf
    for th in thetas:
        _, dd = K.fiber01(bgrid, np.full(len(bgrid), th), deriv=True)
        dmin = min(dmin, float(dd.min()))
        dmax = max(dmax, float(dd.max()))
    lo, hi = np.exp(-2 * np.pi * t), np.exp(2 * np.pi * t)
    lam_lo, lam_hi = K.lam_bounds
    rep["K3"] = {
        "min": dmin, "max": dmax, "margin_lo": lo, "margin_hi": hi,
        "ok": bool(dmin >= lo - 1e-9 and dmax <= hi + 1e-9
                   and dmin > lam_lo and dmax < lam_hi),
    }

    # K4: average vertical expansion on both tori (exact endpoint rates)
    gx = (np.arange(base_grid) + 0.5) / base_grid
    bx, by = np.meshgrid(gx, gx, indexing="ij")
    bgrid = np.stack([bx.ravel(), by.ravel()], axis=-1)
    bound = np.pi * t * (K.params.epsilon - 1.0) + 1e-3
    k4 = {}
    for level in (0, 1):
        val = t * float(np.mean(K.endpoint_rate(bgrid, level)))
        k4[f"torus{level}"] = {"integral": val, "bound": bound,
                               "ok": bool(val < 0 and val <= bound)}
    rep["K4"] = k4

    rep["ok"] = bool(
        rep["K1"]["ok"] and all(v["ok"] for v in k2.values())
        and rep["K3"]["ok"] and all(v["ok"] for v in k4.values())
    )
    return rep


# ---------------------------------------------------------------------------
# perturbations


class PerturbedMap:
    """K followed by a fiber translation supported over a small base ball.

    g(x, theta) = (x', theta' + eta rho(x') sigma(theta')) with
    (x', theta') = K(x, theta); sigma is 1 on the chosen torus and vanishes
    at the other one, so the other torus stays pointwise invariant.
    """

    def __init__(self, K: KanMap, eta: float, which: int = 0,
                 ball_center: Array | None = None, ball_radius: float | None = None):
        if not (0.0 <= eta < K.params.epsilon / 2):
            raise ValueError(f"eta = {eta} outside [0, epsilon/2)")
        self.K = K
        self.eta = float(eta)
        self.which = int(which)
        if ball_center is None:
            ball_center, ball_radius = _find_free_ball(K)
        self.ball_center = np.asarray(ball_center, dtype=float)
        self.ball_radius = float(ball_radius)
        _check_ball(K, self.ball_center, self.ball_radius)

    def rho(self, base: Array) -> Array:
        from .torus import torus_dist

        d = torus_dist(base, self.ball_center)
        return bumps.bump_radial(d, 0.5 * self.ball_radius, self.ball_radius)

    def sigma(self, theta: Array) -> Array:
        return bumps.bump_radial(dist_to_torus(theta, self.which), 0.05, 0.5)

    def _d_sigma(self, theta: Array) -> Array:
        th = wrap2(theta)
        dd_dth = np.sign(th) if self.which == 0 else -np.sign(th)
        return -bumps.d_ramp(dist_to_torus(th, self.which), 0.05, 0.5) * dd_dth

    def step(self, pts: Array, logderiv: bool = False):
        if logderiv:
            out, ld = self.K.step(pts, logderiv=True)
        else:
            out = self.K.step(pts)
        if self.eta == 0.0:
            return (out, ld) if logderiv else out
        th = out[..., 2]
        amp = self.eta * self.rho(out[..., :2])
        out = out.copy()
        out[..., 2] = wrap2(th + amp * self.sigma(th))
        if logderiv:
            ld = ld + np.log(np.abs(1.0 + amp * self._d_sigma(th)))
            return out, ld
        return out

    def iterate(self, pts: Array, n: int) -> Array:
        out = np.asarray(pts, dtype=float)
        for _ in range(n):
            out = self.step(out)
        return out


def break_torus(K: KanMap, eta: float, which: int = 0) -> PerturbedMap:
    """Standard torus-breaking perturbation of size eta at torus `which`."""
    return PerturbedMap(K, eta, which)


def _find_free_ball(K: KanMap) -> tuple[Array, float]:
    """A base ball strictly inside the collar between the domains and U2."""
    lay = K.layout
    eps = lay.epsilon
    radius = eps / 5.0
    offset = lay.h_sq / 2 + eps / 4.0
    for name in ("r", "s"):
        c = np.asarray(K.labels[name], dtype=float)
        for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            center = np.mod(c + offset * np.asarray(d, dtype=float), 1.0)
            try:
                _check_ball(K, center, radius)
                return center, radius
            except SupportCollision:
                continue
    raise SupportCollision("no admissible perturbation ball found")


def _check_ball(K: KanMap, center: Array, radius: float) -> None:
    lay = K.layout
    d = float(lay.min_excluded_dist(center[None, :])[0])
    if d - radius <= 0.0:
        raise SupportCollision("ball touches a construction domain")
    if d + radius >= lay.delta_inner:
        raise SupportCollision("ball reaches into U2")


def su_torus_status(mapping, level: int, depth: int = 12, n_samples: int = 4096,
                    tol: float = 1e-6, seg_len: float = 1.0) -> dict:
    """Track an unstable segment seeded on the torus at `level`.

    Continuation: every iterate stays within tol of the torus.  Broken: some
    iterate leaves by more than 2 tol.  In between: Inconclusive.
    """
    K = mapping.K if isinstance(mapping, PerturbedMap) else mapping
    p = K.labels["p"]
    tau = (np.arange(n_samples) + 0.5) / n_samples - 0.5
    base = np.mod(p + seg_len * tau[:, None] * K.anosov.e_u, 1.0)
    th = np.full(n_samples, 0.0 if level == 0 else 1.0)
    pts = np.concatenate([base, th[:, None]], axis=-1)
    max_dev = 0.0
    for _ in range(depth):
        pts = mapping.step(pts)
        max_dev = max(max_dev, float(np.max(dist_to_torus(pts[:, 2], level))))
    if max_dev <= tol:
        status = "Continuation"
    elif max_dev > 2 * tol:
        status = "Broken"
    else:
        status = "Inconclusive"
    return {"status": status, "max_deviation": max_dev, "depth": depth,
            "tol": tol, "level": level}
