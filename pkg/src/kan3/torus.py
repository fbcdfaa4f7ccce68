"""Hyperbolic toral automorphisms, their fixed points, and adapted charts.

The adapted chart is an affine coordinate patch centered at a fixed point p,
with axes along the stable/unstable eigendirections, scaled so that a chosen
homoclinic point a sits at (0, 1) and its 2*n0-th image at (1, 0).  In these
coordinates the automorphism acts as diag(lambda^-1, lambda), and the box
C = [-2,2]^2 returns to itself after 2*n0 steps in two thin components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateVector,
    EigenvalueTooSmall,
    NotHyperbolic,
    NotUnimodular,
    NoValidN0,
    WrongFixedPointCount,
)

Array = np.ndarray

DEFAULT_MATRIX = ((5, 2), (2, 1))
DEFAULT_LABELS = {
    "p": (0.0, 0.0),
    "q": (0.5, 0.5),
    "r": (0.5, 0.0),
    "s": (0.0, 0.5),
}


def wrap01(x: Array) -> Array:
    """Reduce coordinates to the fundamental domain [0,1)."""
    return np.mod(x, 1.0)


def wrap_half(x: Array) -> Array:
    """Reduce displacements to [-1/2, 1/2)."""
    return np.mod(np.asarray(x, dtype=float) + 0.5, 1.0) - 0.5


def torus_dist(x: Array, y: Array) -> Array:
    """Euclidean distance on the 2-torus."""
    d = wrap_half(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    return np.sqrt(np.sum(d * d, axis=-1))


@dataclass(frozen=True)
class AnosovMap:
    """Integer unimodular matrix with an eigenvalue lambda > 3."""

    matrix: Array
    lam: float
    e_u: Array  # unit unstable eigenvector
    e_s: Array  # unit stable eigenvector

    def apply(self, pts: Array) -> Array:
        return wrap01(np.asarray(pts, dtype=float) @ np.asarray(self.matrix, dtype=float).T)

    def apply_inv(self, pts: Array) -> Array:
        m = np.asarray(self.matrix, dtype=float)
        inv = np.linalg.inv(m)
        return wrap01(np.asarray(pts, dtype=float) @ inv.T)

    @property
    def norm_bounds(self) -> tuple[float, float]:
        """(1/||A^-1||, ||A||) for the operator 2-norm."""
        sv = np.linalg.svd(np.asarray(self.matrix, dtype=float), compute_uv=False)
        return float(sv[-1]), float(sv[0])


def anosov_from_matrix(matrix, min_lambda: float = 3.0, fixed_count: int = 4) -> AnosovMap:
    """Validate an integer matrix and package its hyperbolic eigendata.

    Raises NotUnimodular, NotHyperbolic, EigenvalueTooSmall or
    WrongFixedPointCount as appropriate.
    """
    m = np.asarray(matrix, dtype=float)
    if m.shape != (2, 2) or not np.allclose(m, np.round(m)):
        raise NotUnimodular(f"expected an integer 2x2 matrix, got {matrix!r}")
    m = np.round(m)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(abs(det) - 1.0) > 1e-12:
        raise NotUnimodular(f"|det| = {abs(det)} != 1")
    tr = m[0, 0] + m[1, 1]
    if abs(tr) <= 2:
        raise NotHyperbolic(f"|trace| = {abs(tr)} <= 2")
    vals, vecs = np.linalg.eig(m)
    order = np.argsort(np.abs(vals))
    lam = float(np.abs(vals[order[1]]))
    if lam <= min_lambda:
        raise EigenvalueTooSmall(f"lambda = {lam} <= {min_lambda}")
    count = abs(round(np.linalg.det(m - np.eye(2))))
    if count != fixed_count:
        raise WrongFixedPointCount(f"|det(A - I)| = {count} != {fixed_count}")

    def unit(v):
        v = np.real(v)
        v = v / np.linalg.norm(v)
        # sign convention: first nonzero component positive
        lead = v[0] if abs(v[0]) > 1e-12 else v[1]
        return v if lead > 0 else -v

    e_u = unit(vecs[:, order[1]])
    e_s = unit(vecs[:, order[0]])
    return AnosovMap(matrix=np.array(m, dtype=float), lam=lam, e_u=e_u, e_s=e_s)


def fixed_points(anosov: AnosovMap) -> Array:
    """All solutions of A v = v on the torus, sorted lexicographically.

    Enumerates integer vectors k with v = (A - I)^-1 k landing in [0,1)^2.
    """
    m = np.asarray(anosov.matrix) - np.eye(2)
    # k = (A - I) v ranges over the image of the unit square
    corners = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float) @ m.T
    k0 = np.floor(corners.min(axis=0)).astype(int) - 1
    k1 = np.ceil(corners.max(axis=0)).astype(int) + 1
    inv = np.linalg.inv(m)
    pts = []
    for kx in range(k0[0], k1[0] + 1):
        for ky in range(k0[1], k1[1] + 1):
            v = inv @ np.array([kx, ky], dtype=float)
            v = wrap01(v)
            v[np.abs(v - 1.0) < 1e-9] = 0.0
            if not any(np.max(np.abs(wrap_half(v - w))) < 1e-9 for w in pts):
                pts.append(v)
    expected = abs(round(np.linalg.det(m)))
    if len(pts) != expected:
        raise WrongFixedPointCount(f"enumerated {len(pts)}, expected {expected}")
    pts = np.array(sorted(pts, key=lambda v: (round(v[0], 9), round(v[1], 9))))
    return pts


def label_fixed_points(anosov: AnosovMap, overrides=None) -> dict[str, Array]:
    """Assign the p/q/r/s roles.  Defaults to the half-integer convention."""
    pts = fixed_points(anosov)
    labels = dict(DEFAULT_LABELS)
    if overrides:
        labels.update({k: tuple(v) for k, v in overrides.items()})
    out = {}
    for name, target in labels.items():
        t = np.asarray(target, dtype=float)
        dists = np.array([np.max(np.abs(wrap_half(p - t))) for p in pts])
        i = int(np.argmin(dists))
        if dists[i] > 1e-9:
            raise WrongFixedPointCount(f"no fixed point at label {name}={target}")
        out[name] = pts[i]
    return out


@dataclass(frozen=True)
class Parallelogram:
    """center +- u1 +- u2 on the torus (half-edge vectors u1, u2)."""

    center: Array
    u1: Array
    u2: Array

    def corners(self) -> Array:
        c, u1, u2 = self.center, self.u1, self.u2
        return np.array([c + u1 + u2, c + u1 - u2, c - u1 + u2, c - u1 - u2])

    @property
    def area(self) -> float:
        return float(4.0 * abs(self.u1[0] * self.u2[1] - self.u1[1] * self.u2[0]))

    def scaled(self, f1: float, f2: float) -> "Parallelogram":
        return Parallelogram(self.center, self.u1 * f1, self.u2 * f2)


def parallelograms_disjoint(a: Parallelogram, b: Parallelogram) -> bool:
    """Separating-axis test, using the shortest torus representative.

    Exact for sets of diameter < 1/2 (all the boxes we use are far smaller).
    """
    d = wrap_half(b.center - a.center)
    axes = []
    for u in (a.u1, a.u2, b.u1, b.u2):
        n = np.array([-u[1], u[0]])
        nn = np.linalg.norm(n)
        if nn > 1e-15:
            axes.append(n / nn)
    for ax in axes:
        ra = abs(a.u1 @ ax) + abs(a.u2 @ ax)
        rb = abs(b.u1 @ ax) + abs(b.u2 @ ax)
        if abs(d @ ax) > ra + rb:
            return True
    return False


@dataclass(frozen=True)
class AdaptedChart:
    """Homoclinic chart at p: chart(p)=(0,0), chart(a)=(0,1), chart(A^2n0 a)=(1,0)."""

    anosov: AnosovMap
    p: Array
    m: tuple[int, int]
    n0: int
    j_split: int
    sigma_s: float
    sigma_u: float
    a: Array = field(repr=False, default=None)

    @property
    def lam(self) -> float:
        return self.anosov.lam

    @property
    def lam_pow(self) -> float:
        """lambda^(2 n0), the u-expansion of the return map."""
        return self.lam ** (2 * self.n0)

    @property
    def _dual(self) -> Array:
        """Rows are the dual basis of (sigma_s e_s, sigma_u e_u)."""
        basis = np.stack(
            [self.sigma_s * self.anosov.e_s, self.sigma_u * self.anosov.e_u], axis=1
        )
        return np.linalg.inv(basis)

    def to_chart(self, pts: Array) -> Array:
        """Chart coordinates (s, u); valid near p (patch diameter << 1/2)."""
        d = wrap_half(np.asarray(pts, dtype=float) - self.p)
        return d @ self._dual.T

    def from_chart(self, su: Array) -> Array:
        su = np.asarray(su, dtype=float)
        disp = (
            su[..., :1] * self.sigma_s * self.anosov.e_s
            + su[..., 1:] * self.sigma_u * self.anosov.e_u
        )
        return wrap01(self.p + disp)

    def box(self, s_half: float, u_half: float, center_su=(0.0, 0.0)) -> Parallelogram:
        c = self.from_chart(np.array(center_su, dtype=float))
        return Parallelogram(
            center=c,
            u1=s_half * self.sigma_s * self.anosov.e_s,
            u2=u_half * self.sigma_u * self.anosov.e_u,
        )

    def c_box(self, inflate: float = 0.0) -> Parallelogram:
        """C = [-2,2]^2 in chart coordinates (optionally inflated)."""
        return self.box(2.0 + inflate, 2.0 + inflate)

    def c2_box(self, inflate_s: float = 0.0, u_half_factor: float = 2.0) -> Parallelogram:
        """C2: the return strip at u ~ 1 (u half-width u_half_factor * lam^-2n0)."""
        return self.box(
            2.0 + inflate_s, u_half_factor / self.lam_pow, center_su=(0.0, 1.0)
        )

    def c1_box(self) -> Parallelogram:
        """C1: the return strip at u ~ 0."""
        return self.box(2.0, 2.0 / self.lam_pow)

    def iterated(self, pg: Parallelogram, i: int) -> Parallelogram:
        """Image of a chart-aligned parallelogram under A^i (i may be negative)."""
        c = pg.center
        A = self.anosov
        for _ in range(abs(i)):
            c = A.apply(c) if i > 0 else A.apply_inv(c)
        ls = A.lam ** (-i)
        lu = A.lam ** i
        # u1 is along e_s, u2 along e_u for chart boxes
        return Parallelogram(center=c, u1=pg.u1 * ls, u2=pg.u2 * lu)

    def return_images_disjoint(self, inflate: float = 0.0, u_half_factor: float = 2.0) -> bool:
        """Check C, A(C2), ..., A^(2n0-1)(C2) are pairwise disjoint."""
        sets = [self.c_box(inflate)]
        c2 = self.c2_box(inflate, u_half_factor)
        for i in range(1, 2 * self.n0):
            sets.append(self.iterated(c2, i))
        for i in range(len(sets)):
            for j in range(i + 1, len(sets)):
                if not parallelograms_disjoint(sets[i], sets[j]):
                    return False
        return True


def homoclinic_chart(
    anosov: AnosovMap,
    m: tuple[int, int] | None = None,
    n0: int | None = None,
    n0_cap: int = 6,
    p=(0.0, 0.0),
) -> AdaptedChart:
    """Build an adapted chart from a homoclinic integer vector m.

    The point a = (m . e_u) e_u (mod Z^2) lies on both invariant manifolds of
    p, and A^(2 n0) carries chart position (0,1) to (1,0).  The chart scales
    are sigma_u = c_u lam^(-2 j) and sigma_s = -c_s lam^(-2 (n0 - j)); the
    split j and the return half-time n0 are searched until the box C and the
    iterates of C2 are pairwise disjoint.
    """
    p = np.asarray(p, dtype=float)
    candidates = [tuple(m)] if m is not None else _integer_vectors_by_norm(8)
    n0_list = [n0] if n0 is not None else list(range(3, n0_cap + 1))
    last_err: Exception | None = None
    for mc in candidates:
        mv = np.array(mc, dtype=float)
        basis = np.stack([anosov.e_s, anosov.e_u], axis=1)
        c_s, c_u = np.linalg.solve(basis, mv)
        if abs(c_u) < 1e-9 or abs(c_s) < 1e-9:
            if m is not None:
                raise DegenerateVector(f"m={mc} is parallel to an eigendirection")
            continue
        for n in n0_list:
            for j in range(1, n):
                sigma_u = c_u * anosov.lam ** (-2 * j)
                sigma_s = -c_s * anosov.lam ** (-2 * (n - j))
                # the chart patch [-3,3]^2 must be injective on the torus
                if 3 * (abs(sigma_u) + abs(sigma_s)) > 0.2:
                    continue
                a = wrap01(p + sigma_u * anosov.e_u)
                chart = AdaptedChart(
                    anosov=anosov, p=p, m=mc, n0=n, j_split=j,
                    sigma_s=float(sigma_s), sigma_u=float(sigma_u), a=a,
                )
                if chart.return_images_disjoint():
                    return chart
            last_err = NoValidN0(f"no chart for m={mc} with n0 <= {n0_list[-1]}")
    if last_err is None:
        last_err = DegenerateVector("no usable homoclinic vector found")
    raise last_err


def _integer_vectors_by_norm(max_norm: int) -> list[tuple[int, int]]:
    vecs = [
        (a, b)
        for a in range(-max_norm, max_norm + 1)
        for b in range(-max_norm, max_norm + 1)
        if (a, b) != (0, 0)
    ]
    vecs.sort(key=lambda v: (v[0] ** 2 + v[1] ** 2, v))
    return vecs
