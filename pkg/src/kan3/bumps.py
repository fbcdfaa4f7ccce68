"""Smooth cutoff profiles built from the exp(-1/x) glue."""

from __future__ import annotations

import numpy as np

Array = np.ndarray


def _glue(u: Array) -> Array:
    """exp(-1/u) for u > 0, identically 0 for u <= 0 (C-infinity)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 1e-300
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smoothstep(u: Array) -> Array:
    """C-infinity monotone step: 0 for u <= 0, 1 for u >= 1, max slope 2 at 1/2."""
    u = np.asarray(u, dtype=float)
    a = _glue(u)
    b = _glue(1.0 - u)
    return a / (a + b + 1e-300)


def ramp(x: Array, lo: float, hi: float) -> Array:
    """smoothstep rescaled to rise over [lo, hi]."""
    return smoothstep((np.asarray(x, dtype=float) - lo) / (hi - lo))


def plateau(x: Array, lo0: float, lo1: float, hi1: float, hi0: float) -> Array:
    """0 outside (lo0, hi0), 1 on [lo1, hi1], smooth in between."""
    x = np.asarray(x, dtype=float)
    return ramp(x, lo0, lo1) * (1.0 - ramp(x, hi1, hi0))


def bump_radial(d: Array, r_plateau: float, r_support: float) -> Array:
    """1 for d <= r_plateau, 0 for d >= r_support (d a distance, so d >= 0)."""
    return 1.0 - ramp(d, r_plateau, r_support)


def d_smoothstep(u: Array) -> Array:
    """Derivative of smoothstep (analytic)."""
    u = np.asarray(u, dtype=float)
    a = _glue(u)
    b = _glue(1.0 - u)
    da = np.zeros_like(u)
    db = np.zeros_like(u)
    pos = u > 1e-6
    da[pos] = a[pos] / u[pos] ** 2
    neg = (1.0 - u) > 1e-6
    db[neg] = b[neg] / (1.0 - u[neg]) ** 2
    s = a + b + 1e-300
    return (da * b + a * db) / (s * s)


def d_ramp(x: Array, lo: float, hi: float) -> Array:
    return d_smoothstep((np.asarray(x, dtype=float) - lo) / (hi - lo)) / (hi - lo)


def d_plateau(x: Array, lo0: float, lo1: float, hi1: float, hi0: float) -> Array:
    x = np.asarray(x, dtype=float)
    up = ramp(x, lo0, lo1)
    dn = 1.0 - ramp(x, hi1, hi0)
    dup = d_ramp(x, lo0, lo1)
    ddn = -d_ramp(x, hi1, hi0)
    return dup * dn + up * ddn
