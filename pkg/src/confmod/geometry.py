"""Channel-domain geometry: boundary curves, validation, stretching, splitting.

A channel domain is the plane minus two disjoint obstacle bands stacked
vertically: an upper band between curves ``outer_lower`` (channel-facing) and
``outer_upper`` over an interval [a, b], and a lower band between
``inner_upper`` (channel-facing) and ``inner_lower`` over [c, d] inside
[a, b].  Each band closes at its interval endpoints, so the two boundary
components are Jordan curves and the domain is a ring.  The horizontal strip
between ``inner_upper`` and ``outer_lower`` over [c, d] is the channel; the
two vertical segments at x=c and x=d split the ring into the channel
quadrilateral and the unbounded remainder.

Boundary curves are stored as dense piecewise-linear samples (default 1025
points).  Builtin kinds (polynomial, semicircle arc) additionally carry exact
evaluators used by quadrature and by the grid classifier; the sample arrays
are still kept for polyline export.  All types are immutable after
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DomainValidationError

DEFAULT_SAMPLE_COUNT = 1025

# Tolerance for "exact" endpoint closure and float comparisons in validation.
# Builtin evaluators reproduce shared endpoints only up to rounding.
_VALIDATE_TOL = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle [x0, x1] x [y0, y1]."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"empty box: {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    def expanded(self, margin_x: float, margin_y: float | None = None) -> "Box":
        if margin_y is None:
            margin_y = margin_x
        return Box(self.x0 - margin_x, self.x1 + margin_x,
                   self.y0 - margin_y, self.y1 + margin_y)

    def contains(self, x, y):
        return (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)


@dataclass(frozen=True)
class BoundaryFunction:
    """One boundary curve y = f(x) over [lo, hi].

    kind is "samples" (piecewise linear through the stored points),
    "polynomial" (params = ascending coefficients) or "semicircle-arc"
    (params = (x0, y0, rx, ry, sign); rx != ry after horizontal stretching,
    in which case the arc is elliptical).  Builtins are evaluated exactly;
    the sample arrays are a faithful polyline rendering of the curve.
    """

    x: np.ndarray
    y: np.ndarray
    kind: str = "samples"
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "x", _freeze(self.x))
        object.__setattr__(self, "y", _freeze(self.y))
        if self.x.ndim != 1 or self.x.shape != self.y.shape or self.x.size < 2:
            raise ValueError("boundary function needs matching 1-D sample arrays, >= 2 points")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("boundary function samples must be finite")
        if not np.all(np.diff(self.x) > 0):
            raise ValueError("sample abscissae must be strictly increasing")
        if self.kind not in ("samples", "polynomial", "semicircle-arc"):
            raise ValueError(f"unknown boundary function kind {self.kind!r}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_samples(cls, points: Iterable[Sequence[float]]) -> "BoundaryFunction":
        pts = np.asarray(list(points) if not isinstance(points, np.ndarray) else points,
                         dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("expected an (N, 2) array of [x, y] points")
        return cls(pts[:, 0], pts[:, 1], kind="samples")

    @classmethod
    def polynomial(cls, coeffs: Sequence[float], lo: float, hi: float,
                   n: int = DEFAULT_SAMPLE_COUNT) -> "BoundaryFunction":
        coeffs = tuple(float(c) for c in coeffs)
        xs = np.linspace(lo, hi, n)
        return cls(xs, npoly.polyval(xs, coeffs), kind="polynomial", params=coeffs)

    @classmethod
    def constant(cls, value: float, lo: float, hi: float,
                 n: int = DEFAULT_SAMPLE_COUNT) -> "BoundaryFunction":
        return cls.polynomial([value], lo, hi, n=n)

    @classmethod
    def semicircle(cls, center_x: float, center_y: float, radius: float, side: str,
                   lo: float | None = None, hi: float | None = None,
                   n: int = DEFAULT_SAMPLE_COUNT) -> "BoundaryFunction":
        if radius <= 0:
            raise ValueError("semicircle radius must be positive")
        sign = {"upper": 1.0, "lower": -1.0}.get(side)
        if sign is None:
            raise ValueError("semicircle side must be 'upper' or 'lower'")
        lo = center_x - radius if lo is None else lo
        hi = center_x + radius if hi is None else hi
        if lo < center_x - radius - 1e-12 or hi > center_x + radius + 1e-12:
            raise ValueError("semicircle interval exceeds the arc's horizontal extent")
        params = (float(center_x), float(center_y), float(radius), float(radius), sign)
        xs = np.linspace(lo, hi, n)
        f = cls(xs, np.zeros(n), kind="semicircle-arc", params=params)
        return cls(xs, f(xs), kind="semicircle-arc", params=params)

    # -- evaluation --------------------------------------------------------

    @property
    def lo(self) -> float:
        return float(self.x[0])

    @property
    def hi(self) -> float:
        return float(self.x[-1])

    def __call__(self, xq):
        xq = np.asarray(xq, dtype=float)
        if self.kind == "polynomial":
            return npoly.polyval(xq, np.asarray(self.params))
        if self.kind == "semicircle-arc":
            x0, y0, rx, ry, sign = self.params
            t = np.clip((xq - x0) / rx, -1.0, 1.0)
            return y0 + sign * ry * np.sqrt(1.0 - t * t)
        return np.interp(xq, self.x, self.y)

    # -- transforms --------------------------------------------------------

    def stretched(self, factor: float) -> "BoundaryFunction":
        """Horizontal stretch (x, y) -> (factor*x, y)."""
        if self.kind == "polynomial":
            coeffs = tuple(c / factor ** k for k, c in enumerate(self.params))
            return BoundaryFunction(self.x * factor, self.y, "polynomial", coeffs)
        if self.kind == "semicircle-arc":
            x0, y0, rx, ry, sign = self.params
            return BoundaryFunction(self.x * factor, self.y, "semicircle-arc",
                                    (x0 * factor, y0, rx * factor, ry, sign))
        return BoundaryFunction(self.x * factor, self.y, "samples")

    def translated(self, dx: float, dy: float = 0.0) -> "BoundaryFunction":
        if self.kind == "polynomial":
            p = npoly.Polynomial(self.params)
            shifted = p(npoly.Polynomial([-dx, 1.0])) + dy
            return BoundaryFunction(self.x + dx, self.y + dy, "polynomial",
                                    tuple(shifted.coef))
        if self.kind == "semicircle-arc":
            x0, y0, rx, ry, sign = self.params
            return BoundaryFunction(self.x + dx, self.y + dy, "semicircle-arc",
                                    (x0 + dx, y0 + dy, rx, ry, sign))
        return BoundaryFunction(self.x + dx, self.y + dy, "samples")


@dataclass(frozen=True)
class ChannelDomain:
    """Ring domain: the plane minus two vertically stacked obstacle bands.

    outer_upper/outer_lower bound the upper band over [a, b]; inner_upper/
    inner_lower bound the lower band over [c, d].  outer_lower and
    inner_upper face the channel.  Use validate_domain() to check the
    structural constraints; constructors do not validate cross-curve
    relations so that invalid candidates can be built in tests.
    """

    outer_upper: BoundaryFunction
    outer_lower: BoundaryFunction
    inner_upper: BoundaryFunction
    inner_lower: BoundaryFunction

    @property
    def interval_outer(self) -> tuple[float, float]:
        return (self.outer_lower.lo, self.outer_lower.hi)

    @property
    def interval_inner(self) -> tuple[float, float]:
        return (self.inner_upper.lo, self.inner_upper.hi)

    # -- band membership (vectorized, used by the grid classifier) ---------

    def upper_band(self, x, y):
        a, b = self.interval_outer
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = (x >= a) & (x <= b)
        lo = self.outer_lower(np.clip(x, a, b))
        hi = self.outer_upper(np.clip(x, a, b))
        return inside & (y >= lo) & (y <= hi)

    def lower_band(self, x, y):
        c, d = self.interval_inner
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = (x >= c) & (x <= d)
        lo = self.inner_lower(np.clip(x, c, d))
        hi = self.inner_upper(np.clip(x, c, d))
        return inside & (y >= lo) & (y <= hi)

    # -- descriptive scalars ----------------------------------------------

    def gap_min(self, n: int = 4097) -> float:
        """Narrowest channel opening min(outer_lower - inner_upper) over [c, d]."""
        c, d = self.interval_inner
        xs = union_grid((self.outer_lower, self.inner_upper), c, d, n)
        return float(np.min(self.outer_lower(xs) - self.inner_upper(xs)))

    def vertical_extent(self, n: int = 4097) -> tuple[float, float]:
        a, b = self.interval_outer
        c, d = self.interval_inner
        top = np.max(self.outer_upper(np.linspace(a, b, n)))
        bot = np.min(self.inner_lower(np.linspace(c, d, n)))
        return (float(bot), float(top))

    def bounding_box(self) -> Box:
        a, b = self.interval_outer
        bot, top = self.vertical_extent()
        return Box(a, b, bot, top)


def union_grid(fns: Iterable[BoundaryFunction], lo: float, hi: float,
               n_extra: int = 0) -> np.ndarray:
    """All sample abscissae of fns clipped to [lo, hi], plus an even fill."""
    parts = [np.asarray([lo, hi])]
    for f in fns:
        xs = f.x
        parts.append(xs[(xs >= lo) & (xs <= hi)])
    if n_extra:
        parts.append(np.linspace(lo, hi, n_extra))
    return np.unique(np.concatenate(parts))


# ---------------------------------------------------------------------------
# validation

def domain_violations(dom: ChannelDomain, tol: float = _VALIDATE_TOL) -> list[str]:
    """Collect every structural violation; empty list means valid."""
    errors: list[str] = []
    a, b = dom.outer_lower.lo, dom.outer_lower.hi
    c, d = dom.inner_upper.lo, dom.inner_upper.hi

    if (dom.outer_upper.lo, dom.outer_upper.hi) != (a, b):
        errors.append("interval-violation: outer_upper and outer_lower span different intervals")
    if (dom.inner_lower.lo, dom.inner_lower.hi) != (c, d):
        errors.append("interval-violation: inner_upper and inner_lower span different intervals")
    if not (a < b):
        errors.append(f"interval-violation: outer interval [{a}, {b}] is empty")
    if not (c < d):
        errors.append(f"interval-violation: inner interval [{c}, {d}] is empty")
    if c < a - tol or d > b + tol:
        errors.append(f"interval-violation: inner interval [{c}, {d}] not contained in [{a}, {b}]")
    if errors:
        # Cross-curve checks below assume coherent intervals.
        return errors

    xs_outer = union_grid((dom.outer_upper, dom.outer_lower), a, b)
    diff = dom.outer_upper(xs_outer) - dom.outer_lower(xs_outer)
    if np.min(diff) < -tol:
        k = int(np.argmin(diff))
        errors.append(f"ordering-violation: outer_lower above outer_upper at x={xs_outer[k]:.6g}")

    xs_inner = union_grid((dom.inner_upper, dom.inner_lower), c, d)
    diff = dom.inner_upper(xs_inner) - dom.inner_lower(xs_inner)
    if np.min(diff) < -tol:
        k = int(np.argmin(diff))
        errors.append(f"ordering-violation: inner_lower above inner_upper at x={xs_inner[k]:.6g}")

    xs_gap = union_grid((dom.outer_lower, dom.inner_upper), c, d)
    gap = dom.outer_lower(xs_gap) - dom.inner_upper(xs_gap)
    if np.min(gap) <= 0.0:
        k = int(np.argmin(gap))
        errors.append("ordering-violation: channel gap not strictly positive at "
                      f"x={xs_gap[k]:.6g} (inner_upper must stay strictly below outer_lower)")

    scale = max(1.0, abs(a), abs(b))
    for name, f, g, xx in (("outer at a", dom.outer_lower, dom.outer_upper, a),
                           ("outer at b", dom.outer_lower, dom.outer_upper, b),
                           ("inner at c", dom.inner_upper, dom.inner_lower, c),
                           ("inner at d", dom.inner_upper, dom.inner_lower, d)):
        fv, gv = float(f(xx)), float(g(xx))
        if abs(fv - gv) > tol * max(scale, abs(fv), abs(gv)):
            errors.append(f"endpoint-mismatch: {name}: {fv!r} != {gv!r}")
    return errors


def validate_domain(dom: ChannelDomain, tol: float = _VALIDATE_TOL) -> ChannelDomain:
    """Return dom unchanged if structurally valid, else raise with all violations."""
    errors = domain_violations(dom, tol=tol)
    if errors:
        raise DomainValidationError(errors)
    return dom


# ---------------------------------------------------------------------------
# transforms

def stretch(dom: ChannelDomain, factor: float) -> ChannelDomain:
    """Horizontal stretch (x, y) -> (factor*x, y) of the whole domain."""
    if not (math.isfinite(factor) and factor > 0):
        raise ValueError(f"stretch factor must be positive and finite, got {factor!r}")
    return ChannelDomain(dom.outer_upper.stretched(factor),
                         dom.outer_lower.stretched(factor),
                         dom.inner_upper.stretched(factor),
                         dom.inner_lower.stretched(factor))


def translate(dom: ChannelDomain, dx: float, dy: float = 0.0) -> ChannelDomain:
    return ChannelDomain(dom.outer_upper.translated(dx, dy),
                         dom.outer_lower.translated(dx, dy),
                         dom.inner_upper.translated(dx, dy),
                         dom.inner_lower.translated(dx, dy))


def has_straight_channel(dom: ChannelDomain, tol: float = 1e-9, n: int = 513) -> bool:
    """Whether both channel walls are affine over the inner interval.

    A straight channel splits losslessly at the gate verticals even at small
    stretch, so the additivity ratio starts saturated at 1 and shows no
    trend; callers use this to pick the right check mode.
    """
    c, d = dom.interval_inner
    xs = np.linspace(c, d, n)
    for f in (dom.outer_lower, dom.inner_upper):
        ys = f(xs)
        line = ys[0] + (ys[-1] - ys[0]) * (xs - c) / (d - c)
        if np.max(np.abs(ys - line)) > tol * max(1.0, float(np.max(np.abs(ys)))):
            return False
    return True


def is_updown_symmetric(dom: ChannelDomain, tol: float = 1e-9, n: int = 513) -> bool:
    """Whether the two bands are mirror images across some horizontal line."""
    a, b = dom.interval_outer
    c, d = dom.interval_inner
    if abs(a - c) > tol or abs(b - d) > tol:
        return False
    xs = np.linspace(a, b, n)
    mid = 0.5 * (dom.outer_lower(xs) + dom.inner_upper(xs))
    if np.ptp(mid) > tol:
        return False
    axis = float(mid[0])
    for f, g in ((dom.outer_lower, dom.inner_upper),
                 (dom.outer_upper, dom.inner_lower)):
        if np.max(np.abs((f(xs) - axis) + (g(xs) - axis))) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# quadrilaterals

def polygon_area(vertices: np.ndarray) -> float:
    """Signed shoelace area of a closed polyline given without the repeated end."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class Quadrilateral:
    """Jordan domain bounded by a closed polyline with four marked vertices.

    The polyline is stored open (no repeated endpoint) and traversed with the
    domain on its left; interior domains are counterclockwise.  With
    exterior=True the domain is the outside of the polyline clipped to
    clip_box (used for the unbounded piece of a split ring), and the
    traversal is clockwise in the plane so the domain stays on the left.
    marked indexes the four corner vertices in traversal order; boundary arc
    k runs from marked[k] to marked[(k+1) % 4].
    """

    vertices: np.ndarray
    marked: tuple[int, int, int, int]
    exterior: bool = False
    clip_box: Box | None = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 4:
            raise ValueError("quadrilateral needs an (N, 2) vertex array with N >= 4")
        object.__setattr__(self, "vertices", _freeze(v))
        m = tuple(int(i) for i in self.marked)
        if len(m) != 4:
            raise ValueError("exactly four marked vertices required")
        if not all(0 <= i < v.shape[0] for i in m):
            raise ValueError("marked index out of range")
        if not (m[0] < m[1] < m[2] < m[3]):
            raise ValueError("marked indices must be strictly increasing")
        object.__setattr__(self, "marked", m)
        if self.exterior and self.clip_box is None:
            raise ValueError("an exterior quadrilateral requires a clip_box")

    @property
    def corners(self) -> np.ndarray:
        return self.vertices[list(self.marked)]

    def area(self) -> float:
        return polygon_area(self.vertices)

    def arcs(self) -> list[np.ndarray]:
        """Four vertex chains, arc k from marked[k] to marked[(k+1) % 4]."""
        n = self.vertices.shape[0]
        out = []
        for k in range(4):
            i, j = self.marked[k], self.marked[(k + 1) % 4]
            idx = list(range(i, j + 1)) if i < j else list(range(i, n)) + list(range(0, j + 1))
            out.append(self.vertices[idx])
        return out

    def conjugate(self) -> "Quadrilateral":
        """Same polyline with the marked vertices rotated by one position."""
        n = self.vertices.shape[0]
        shift = self.marked[1]
        rolled = np.roll(self.vertices, -shift, axis=0)
        m = sorted((i - shift) % n for i in self.marked)
        return Quadrilateral(rolled, tuple(m), self.exterior, self.clip_box)

    def validate(self) -> "Quadrilateral":
        import shapely.geometry

        if not shapely.geometry.Polygon(self.vertices).is_valid:
            raise ValueError("quadrilateral polyline must be simple (non-self-intersecting)")
        area = self.area()
        if self.exterior:
            if area >= 0:
                raise ValueError("exterior quadrilateral polyline must be clockwise "
                                 "(domain on the left)")
            if self.clip_box is not None:
                v = self.vertices
                if not np.all(self.clip_box.contains(v[:, 0], v[:, 1])):
                    raise ValueError("clip_box must contain the polyline")
        elif area <= 0:
            raise ValueError("interior quadrilateral polyline must be counterclockwise")
        return self


# ---------------------------------------------------------------------------
# splitting a channel ring at the two gate verticals

def _restrict_samples(f: BoundaryFunction, lo: float, hi: float) -> np.ndarray:
    """Interior sample abscissae of f strictly inside (lo, hi)."""
    xs = f.x
    return xs[(xs > lo) & (xs < hi)]


def split_at_verticals(dom: ChannelDomain, box: Box | None = None,
                       box_factor: float = 3.0) -> tuple[Quadrilateral, Quadrilateral]:
    """Split the ring along the verticals x=c and x=d.

    Returns (channel quadrilateral, outer quadrilateral).  The channel piece
    is the strip between inner_upper and outer_lower over [c, d], marked at
    its four corners starting from the top-left, counterclockwise.  The outer
    piece is the rest of the ring: an exterior quadrilateral around the
    obstacle chain, marked at the same gate endpoints in reversed order, and
    clipped by `box` (default: the data's bounding box grown to box_factor
    times its larger dimension).
    """
    validate_domain(dom)
    a, b = dom.interval_outer
    c, d = dom.interval_inner
    f1, g1 = dom.outer_lower, dom.outer_upper
    f2, g2 = dom.inner_upper, dom.inner_lower

    A = (c, float(f1(c)))
    B = (c, float(f2(c)))
    C = (d, float(f2(d)))
    D = (d, float(f1(d)))
    if not (A[1] > B[1] and D[1] > C[1]):
        raise DomainValidationError(
            ["degenerate-strip: a gate vertical has nonpositive height"])

    # Channel piece: A (top-left) -> B -> along inner_upper -> C -> D -> back
    # along outer_lower.
    xs_bot = _restrict_samples(f2, c, d)
    xs_top = _restrict_samples(f1, c, d)
    verts_q = [A, B]
    verts_q += [(x, float(f2(x))) for x in xs_bot]
    verts_q += [C, D]
    verts_q += [(x, float(f1(x))) for x in xs_top[::-1]]
    marked_q = (0, 1, 2 + len(xs_bot), 3 + len(xs_bot))
    quad_channel = Quadrilateral(np.array(verts_q), marked_q)

    # Outer piece: D -> C -> along inner_lower -> B -> A -> out along
    # outer_lower to (a, .) -> over outer_upper to (b, .) -> back along
    # outer_lower to D.  Clockwise, domain (the ring exterior) on the left.
    xs_g2 = _restrict_samples(g2, c, d)
    xs_f1_left = _restrict_samples(f1, a, c)
    xs_g1 = _restrict_samples(g1, a, b)
    xs_f1_right = _restrict_samples(f1, d, b)
    verts_p = [D, C]
    verts_p += [(x, float(g2(x))) for x in xs_g2[::-1]]
    iB = len(verts_p)
    verts_p += [B, A]
    iA = iB + 1
    verts_p += [(x, float(f1(x))) for x in xs_f1_left[::-1]]
    verts_p += [(a, float(f1(a)))]
    verts_p += [(x, float(g1(x))) for x in xs_g1]
    verts_p += [(b, float(f1(b)))]
    verts_p += [(x, float(f1(x))) for x in xs_f1_right[::-1]]
    marked_p = (0, 1, iB, iA)

    if box is None:
        data_box = dom.bounding_box()
        margin = 0.5 * (box_factor - 1.0) * max(data_box.width, data_box.height)
        box = data_box.expanded(margin)
    quad_outer = Quadrilateral(np.array(verts_p), marked_p, exterior=True, clip_box=box)
    return quad_channel, quad_outer
