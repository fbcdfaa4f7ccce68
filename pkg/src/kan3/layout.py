"""Base-torus domain layout for the skew-product construction.

Seven regions drive the vertical dynamics: small squares U_r, U_s, U_q at
three of the fixed points, a neighborhood U_C of the chart box C, a
neighborhood U_C2 of the return strip C2 (whose images A^i(U_C2),
i = 1..2n0-1, are carried along), and the large region U2 on which the
fiber maps contract toward the two boundary tori.  U1 is a plateau inside
U2 with Leb(U1) > 1/2, which is what makes the average vertical exponent
negative on both invariant tori.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bumps
from .errors import InfeasibleLayout
from .torus import AdaptedChart, Parallelogram, parallelograms_disjoint, wrap_half

Array = np.ndarray


def square_dist(pts: Array, center: Array, half: float) -> Array:
    """Euclidean distance to an axis-aligned square on the torus."""
    d = np.abs(wrap_half(np.asarray(pts, dtype=float) - center))
    ex = np.maximum(d - half, 0.0)
    return np.sqrt(np.sum(ex * ex, axis=-1))


def in_square(pts: Array, center: Array, half: float) -> Array:
    d = np.abs(wrap_half(np.asarray(pts, dtype=float) - center))
    return np.max(d, axis=-1) < half


@dataclass(frozen=True)
class ChartStrip:
    """A^i image of a chart-aligned box, with fast membership/distance tests.

    Coordinates are measured along unit vectors ee1 (stable side) and ee2
    (unstable side); half1/half2 are the absolute half-extents.  For the
    default symmetric matrix the axes are orthogonal and the distance is
    exact; otherwise it is a same-order proxy (only used to shape cutoffs).
    """

    center: Array
    ee1: Array
    ee2: Array
    half1: float
    half2: float

    def coords(self, pts: Array) -> tuple[Array, Array]:
        w = wrap_half(np.asarray(pts, dtype=float) - self.center)
        return w @ self.ee1, w @ self.ee2

    def dist(self, pts: Array) -> Array:
        c1, c2 = self.coords(pts)
        e1 = np.maximum(np.abs(c1) - self.half1, 0.0)
        e2 = np.maximum(np.abs(c2) - self.half2, 0.0)
        return np.sqrt(e1 * e1 + e2 * e2)

    def contains(self, pts: Array, inflate: float = 1.0) -> Array:
        c1, c2 = self.coords(pts)
        return (np.abs(c1) < self.half1 * inflate) & (np.abs(c2) < self.half2 * inflate)

    def as_parallelogram(self) -> Parallelogram:
        return Parallelogram(
            center=self.center, u1=self.half1 * self.ee1, u2=self.half2 * self.ee2
        )


def _strip_from_box(chart: AdaptedChart, pg: Parallelogram) -> ChartStrip:
    n1 = np.linalg.norm(pg.u1)
    n2 = np.linalg.norm(pg.u2)
    return ChartStrip(
        center=pg.center, ee1=pg.u1 / n1, ee2=pg.u2 / n2, half1=float(n1), half2=float(n2)
    )


@dataclass(frozen=True)
class DomainLayout:
    chart: AdaptedChart
    epsilon: float
    labels: dict = field(repr=False)
    h_sq: float                      # full side of the U_r / U_s / U_q squares
    delta_c: float                   # chart-unit inflation of C -> U_C
    uc: ChartStrip                   # U_C
    uc2_images: tuple                # ChartStrip for A^i(U_C2), i = 0..2n0-1
    c2_core_images: tuple            # ChartStrip for A^i(C2) (alpha plateaus)
    delta_inner: float               # U2 keeps this distance from every domain
    delta_outer: float               # U1 keeps this distance (alpha1 = 1 beyond)

    # --- membership -------------------------------------------------------

    def _sq_center(self, name: str) -> Array:
        return self.labels[name]

    def in_ur(self, pts: Array) -> Array:
        return in_square(pts, self._sq_center("r"), self.h_sq / 2)

    def in_us(self, pts: Array) -> Array:
        return in_square(pts, self._sq_center("s"), self.h_sq / 2)

    def in_uq(self, pts: Array) -> Array:
        return in_square(pts, self._sq_center("q"), self.h_sq / 2)

    def in_tube(self, pts: Array) -> Array:
        """Union of A^i(U_C2), i = 0..2n0-1."""
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1], dtype=bool)
        for strip in self.uc2_images:
            out |= strip.contains(pts)
        return out

    def in_correction_base(self, pts: Array) -> Array:
        """A^(2n0-1)(U_C2), where the return-time affine correction acts."""
        return self.uc2_images[-1].contains(pts)

    # --- exclusion distances (shape U1 / U2) ------------------------------

    def _excluded(self):
        yield ("r", "square")
        yield ("s", "square")
        yield ("q", "square")
        yield (self.uc, "strip")
        for strip in self.uc2_images[1:]:
            yield (strip, "strip")

    def min_excluded_dist(self, pts: Array) -> Array:
        pts = np.asarray(pts, dtype=float)
        best = None
        for obj, kind in self._excluded():
            if kind == "square":
                d = square_dist(pts, self._sq_center(obj), self.h_sq / 2)
            else:
                d = obj.dist(pts)
            best = d if best is None else np.minimum(best, d)
        return best

    def in_u2(self, pts: Array) -> Array:
        return self.min_excluded_dist(pts) > self.delta_inner

    def in_u1(self, pts: Array) -> Array:
        return self.min_excluded_dist(pts) > self.delta_outer

    # --- smooth coefficients ---------------------------------------------

    def alpha_u2(self, pts: Array) -> Array:
        """1 on U1, 0 off U2 (smooth in between)."""
        pts = np.asarray(pts, dtype=float)
        out = np.ones(pts.shape[:-1], dtype=float)
        for obj, kind in self._excluded():
            if kind == "square":
                d = square_dist(pts, self._sq_center(obj), self.h_sq / 2)
            else:
                d = obj.dist(pts)
            out *= bumps.ramp(d, self.delta_inner, self.delta_outer)
        return out

    def _square_bump(self, pts: Array, name: str) -> Array:
        d = np.abs(wrap_half(np.asarray(pts, dtype=float) - self._sq_center(name)))
        h = self.h_sq / 2
        return bumps.bump_radial(d[..., 0], h / 2, h) * bumps.bump_radial(d[..., 1], h / 2, h)

    def alpha_r(self, pts: Array) -> Array:
        return self._square_bump(pts, "r")

    def alpha_s(self, pts: Array) -> Array:
        return self._square_bump(pts, "s")

    def alpha2(self, pts: Array) -> Array:
        """Coefficient of the corrective vertical field; bump inside U_q."""
        d = square_dist(pts, self._sq_center("q"), 0.0)  # distance to the point q
        h = self.h_sq / 2
        return bumps.bump_radial(d, 0.55 * h, 0.9 * h)

    def _strip_bump(self, pts: Array, strip: ChartStrip, core1: float, core2: float) -> Array:
        c1, c2 = strip.coords(pts)
        b1 = bumps.bump_radial(np.abs(c1), core1, strip.half1)
        b2 = bumps.bump_radial(np.abs(c2), core2, strip.half2)
        return b1 * b2

    def alpha_c(self, pts: Array) -> Array:
        """1 on C, 0 off U_C."""
        core = 2.0 * abs(self.chart.sigma_s), 2.0 * abs(self.chart.sigma_u)
        return self._strip_bump(pts, self.uc, core[0], core[1])

    def alpha_tube(self, pts: Array, i: int) -> Array:
        """1 on A^i(C2), 0 off A^i(U_C2).  For i = 0 defer to alpha_c."""
        if i == 0:
            return self.alpha_c(pts)
        strip = self.uc2_images[i]
        core = self.c2_core_images[i]
        return self._strip_bump(pts, strip, core.half1, core.half2)

    def alpha1(self, pts: Array) -> Array:
        """The global amplitude of the primary vertical field (smooth, [0,1])."""
        pts = np.asarray(pts, dtype=float)
        out = self.alpha_r(pts) + self.alpha_s(pts) + self.alpha_c(pts) + self.alpha_u2(pts)
        for i in range(1, len(self.uc2_images)):
            out = out + self.alpha_tube(pts, i)
        return out

    # --- measures ---------------------------------------------------------

    def area_u1(self, n: int = 1024) -> float:
        xs = (np.arange(n) + 0.5) / n
        total = 0
        for x in xs:  # row by row to bound memory
            row = np.stack([np.full(n, x), xs], axis=-1)
            total += int(np.count_nonzero(self.in_u1(row)))
        return total / (n * n)

    def summary(self) -> dict:
        chart = self.chart
        tube_area = sum(s.as_parallelogram().area for s in self.uc2_images[1:])
        return {
            "epsilon": self.epsilon,
            "square_area": self.h_sq ** 2,
            "uc_area": self.uc.as_parallelogram().area,
            "tube_area": tube_area,
            "n0": chart.n0,
        }


def build_layout(chart: AdaptedChart, labels: dict, epsilon: float = 0.05) -> DomainLayout:
    """Construct and validate the domain layout.

    Raises InfeasibleLayout if epsilon is out of range, if any two domains
    touch, or if the resulting U1 plateau has measure <= 1/2.
    """
    if not (0.0 < epsilon < 0.1):
        raise InfeasibleLayout(f"epsilon = {epsilon} outside (0, 0.1)")
    h_sq = min(0.1, np.sqrt(0.8 * epsilon))
    delta_c = 0.25
    uc = _strip_from_box(chart, chart.c_box(delta_c))
    uc2 = chart.c2_box(inflate_s=0.1, u_half_factor=3.0)
    c2 = chart.c2_box(inflate_s=0.0, u_half_factor=2.0)
    uc2_images = tuple(
        _strip_from_box(chart, chart.iterated(uc2, i)) for i in range(2 * chart.n0)
    )
    c2_core_images = tuple(
        _strip_from_box(chart, chart.iterated(c2, i)) for i in range(2 * chart.n0)
    )
    layout = DomainLayout(
        chart=chart,
        epsilon=epsilon,
        labels=labels,
        h_sq=float(h_sq),
        delta_c=delta_c,
        uc=uc,
        uc2_images=uc2_images,
        c2_core_images=c2_core_images,
        delta_inner=epsilon / 2,
        delta_outer=epsilon,
    )
    _validate(layout)
    return layout


def _validate(layout: DomainLayout) -> None:
    chart = layout.chart
    eps = layout.epsilon
    if layout.h_sq ** 2 >= eps:
        raise InfeasibleLayout("fixed-point squares too large")
    # pairwise disjointness: squares vs squares and vs every chart strip
    squares = []
    for name in ("r", "s", "q"):
        c = layout.labels[name]
        h = layout.h_sq / 2
        squares.append(
            Parallelogram(center=np.asarray(c, float), u1=np.array([h, 0.0]),
                          u2=np.array([0.0, h]))
    )
    strips = [layout.uc.as_parallelogram()] + [
        s.as_parallelogram() for s in layout.uc2_images[1:]
    ]
    everything = squares + strips
    for i in range(len(everything)):
        for j in range(i + 1, len(everything)):
            if not parallelograms_disjoint(everything[i], everything[j]):
                raise InfeasibleLayout(f"domains {i} and {j} overlap")
    small_area = layout.uc.as_parallelogram().area + sum(
        s.as_parallelogram().area for s in layout.uc2_images[1:]
    )
    if small_area >= eps:
        raise InfeasibleLayout("chart tube area exceeds epsilon")
    if layout.area_u1(512) <= 0.5:
        raise InfeasibleLayout("Leb(U1) <= 1/2")
