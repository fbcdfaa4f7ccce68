"""Vertical vector fields on the fiber [0,1] and their time-t flows.

The primary field has four branches, all multiples of sin(pi theta) or
sin(2 pi theta) with base-dependent constant amplitude; those flows have
exact closed forms through the tangent linearization:

    tan(pi theta / 2)   linearizes  theta' = c sin(pi theta)   (rate c pi)
    tan(pi theta)       linearizes  theta' = c sin(2 pi theta) (rate 2 c pi at 0)
    tan(pi (theta-1/2)) linearizes  the same field around 1/2   (rate -2 c pi)

The theta-modulated branches (beta1 window, corrective beta2 field) fall
back to RK4 with Richardson step control, carrying the variational equation
for the fiber derivative.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import bumps

Array = np.ndarray

KAPPA = 2.0 * np.pi  # linearization rate of -sin(2 pi theta) at theta = 1/2


@dataclass(frozen=True)
class FieldSpec:
    """Shape parameters of the fiber fields."""

    epsilon: float = 0.05
    theta0: float = 0.45     # interior sink of the corrective field
    c_mid: float = 0.18      # mid-range slope scale of beta2

    def __post_init__(self):
        if not (0.0 < self.epsilon < 0.1):
            raise ValueError(f"epsilon = {self.epsilon} outside (0, 0.1)")
        if not (2 * self.epsilon < self.theta0 < 1 - 2 * self.epsilon):
            raise ValueError(f"theta0 = {self.theta0} too close to the ends")

    # beta1: 0 near the ends, 1 on the central window (0.5 - eps, 0.5 + eps)
    def beta1(self, theta: Array) -> Array:
        e = self.epsilon
        return bumps.plateau(theta, e, 0.5 - e, 0.5 + e, 1.0 - e)

    def d_beta1(self, theta: Array) -> Array:
        e = self.epsilon
        return bumps.d_plateau(theta, e, 0.5 - e, 0.5 + e, 1.0 - e)

    # beta2: slope exactly 1 at both ends, positive on (0, theta0),
    # negative on (theta0, 1)
    def _beta2_parts(self, theta: Array):
        e = self.epsilon
        th = np.asarray(theta, dtype=float)
        u_l = 1.0 - bumps.ramp(th, e, 2 * e)
        u_r = bumps.ramp(th, 1.0 - 2 * e, 1.0 - e)
        u_m = 1.0 - u_l - u_r
        return th, u_l, u_r, u_m

    def beta2(self, theta: Array) -> Array:
        th, u_l, u_r, u_m = self._beta2_parts(theta)
        return u_l * th + u_r * (th - 1.0) + u_m * self.c_mid * (self.theta0 - th)

    def d_beta2(self, theta: Array) -> Array:
        e = self.epsilon
        th, u_l, u_r, u_m = self._beta2_parts(theta)
        du_l = -bumps.d_ramp(th, e, 2 * e)
        du_r = bumps.d_ramp(th, 1.0 - 2 * e, 1.0 - e)
        du_m = -du_l - du_r
        return (
            du_l * th + u_l
            + du_r * (th - 1.0) + u_r
            + du_m * self.c_mid * (self.theta0 - th) - u_m * self.c_mid
        )


# ---------------------------------------------------------------------------
# closed-form flows


def flow_sin_pi(theta: Array, c: Array, t: float, deriv: bool = False):
    """Time-t flow of theta' = c sin(pi theta) on [0, 1] (exact)."""
    th = np.asarray(theta, dtype=float)
    c = np.broadcast_to(np.asarray(c, dtype=float), th.shape)
    out = np.empty_like(th)
    dd = np.empty_like(th) if deriv else None
    g = np.exp(np.pi * c * t)
    lo = th <= 0.5
    y = np.tan(0.5 * np.pi * np.where(lo, th, 0.0))
    yt = y * g
    out[lo] = (2.0 / np.pi) * np.arctan(yt[lo])
    z = np.tan(0.5 * np.pi * np.where(lo, 0.0, 1.0 - th))
    zt = z / g
    out[~lo] = 1.0 - (2.0 / np.pi) * np.arctan(zt[~lo])
    if deriv:
        dd[lo] = (g * (1 + y * y) / (1 + yt * yt))[lo]
        dd[~lo] = ((1 + z * z) / (g * (1 + zt * zt)))[~lo]
        return out, dd
    return out


def _flow_sin_2pi_half(th: Array, c: Array, t: float):
    """Flow of theta' = c sin(2 pi theta) restricted to [0, 1/2]."""
    g = np.exp(2.0 * np.pi * c * t)
    z = np.tan(np.pi * np.minimum(th, 0.49999999999))
    fixed = np.abs(th - 0.5) < 1e-15
    zt = z * g
    out = np.arctan(zt) / np.pi
    out[fixed] = 0.5
    der = g * (1 + z * z) / (1 + zt * zt)
    der[fixed] = 1.0 / g[fixed] if np.ndim(g) else 1.0 / g
    return out, der


def flow_sin_2pi(theta: Array, c: Array, t: float, deriv: bool = False):
    """Time-t flow of theta' = c sin(2 pi theta) on [0, 1] (exact).

    Both halves [0,1/2] and [1/2,1] are invariant; the upper half is the
    mirror image of the lower one.
    """
    th = np.asarray(theta, dtype=float)
    c = np.broadcast_to(np.asarray(c, dtype=float), th.shape).astype(float)
    lo = th <= 0.5
    out = np.empty_like(th)
    dd = np.empty_like(th)
    o1, d1 = _flow_sin_2pi_half(np.where(lo, th, 0.0), c, t)
    o2, d2 = _flow_sin_2pi_half(np.where(lo, 0.0, 1.0 - th), c, t)
    out[lo] = o1[lo]
    dd[lo] = d1[lo]
    out[~lo] = (1.0 - o2)[~lo]
    dd[~lo] = d2[~lo]
    if deriv:
        return out, dd
    return out


# ---------------------------------------------------------------------------
# RK4 with Richardson step control and the variational equation


def rk4_flow(f, fprime, theta0: Array, t: float, tol: float = 1e-10,
             base_steps: int = 64, max_steps: int = 2 ** 14,
             fixed_n: int | None = None):
    """Integrate theta' = f(theta) together with v' = f'(theta) v, v(0)=1.

    Doubles the (fixed) step count until two successive answers agree to
    `tol` in the sup norm, starting from ~base_steps per unit time.
    fixed_n skips the step control entirely (for tabulated fields whose
    interpolation kinks would defeat the Richardson comparison).
    """
    th0 = np.asarray(theta0, dtype=float)

    def run(n: int):
        h = t / n
        th = th0.copy()
        v = np.ones_like(th)
        for _ in range(n):
            k1 = f(th)
            l1 = fprime(th) * v
            k2 = f(th + 0.5 * h * k1)
            l2 = fprime(th + 0.5 * h * k1) * (v + 0.5 * h * l1)
            k3 = f(th + 0.5 * h * k2)
            l3 = fprime(th + 0.5 * h * k2) * (v + 0.5 * h * l2)
            k4 = f(th + h * k3)
            l4 = fprime(th + h * k3) * (v + h * l3)
            th = th + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            v = v + (h / 6.0) * (l1 + 2 * l2 + 2 * l3 + l4)
        return th, v

    if fixed_n is not None:
        return run(fixed_n)
    n = max(8, int(np.ceil(base_steps * abs(t))))
    th, v = run(n)
    while n < max_steps:
        n *= 2
        th2, v2 = run(n)
        if th.size == 0 or max(np.max(np.abs(th2 - th)), np.max(np.abs(v2 - v))) < tol:
            th, v = th2, v2
            break
        th, v = th2, v2
    return th, v


def flow_beta1_sin_2pi(theta: Array, c: Array, t: float, spec: FieldSpec,
                       deriv: bool = False):
    """Time-t flow of theta' = c beta1(theta) sin(2 pi theta).

    On the beta1 plateau around 1/2 this is the pure sin(2 pi theta) flow
    (used in closed form); elsewhere RK4.
    """
    th = np.asarray(theta, dtype=float)
    c = np.broadcast_to(np.asarray(c, dtype=float), th.shape).astype(float)
    out, dd = flow_sin_2pi(th, c, t, deriv=True)
    margin = 0.999 * spec.epsilon
    exact = (np.abs(th - 0.5) <= margin) & (np.abs(out - 0.5) <= margin)
    rest = ~exact
    if np.any(rest):
        cr = c[rest]

        def f(x):
            return cr * spec.beta1(x) * np.sin(2 * np.pi * x)

        def fp(x):
            return cr * (
                spec.d_beta1(x) * np.sin(2 * np.pi * x)
                + 2 * np.pi * spec.beta1(x) * np.cos(2 * np.pi * x)
            )

        o, d = rk4_flow(f, fp, th[rest], t)
        out[rest] = o
        dd[rest] = d
    if deriv:
        return out, dd
    return out


@lru_cache(maxsize=8)
def _beta2_table(spec: FieldSpec, n: int = 16001):
    x = np.linspace(0.0, 1.0, n)
    return x, spec.beta2(x), spec.d_beta2(x)


def flow_beta2(theta: Array, a: Array, t: float, spec: FieldSpec,
               deriv: bool = False, exact: bool = False):
    """Time-t flow of the corrective field theta' = a beta2(theta).

    The default path integrates a dense tabulation of beta2 (the field is
    C-infinity and O(1), so the table is accurate to ~1e-7, far below every
    tolerance that touches this region); exact=True integrates the closed
    forms directly.
    """
    th = np.asarray(theta, dtype=float)
    a = np.broadcast_to(np.asarray(a, dtype=float), th.shape).astype(float)

    if exact:
        def f(x):
            return a * spec.beta2(x)

        def fp(x):
            return a * spec.d_beta2(x)

        out, dd = rk4_flow(f, fp, th, t)
    else:
        xg, bg, dbg = _beta2_table(spec)

        def f(x):
            return a * np.interp(x, xg, bg)

        def fp(x):
            return a * np.interp(x, xg, dbg)

        out, dd = rk4_flow(f, fp, th, t, fixed_n=16)
    if deriv:
        return out, dd
    return out
