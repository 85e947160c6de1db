"""Grid condensers: cell classification and cut-cell edge conductances.

The solvers discretize a condenser on a cell-centered Cartesian grid (cells
dx wide, dy tall; unknowns at cell centers).  Cells are labeled free,
plate-0, plate-1, or exterior; conductances live on the edges between
horizontally or vertically adjacent cells.  A full edge between free cells
carries the unit-square conductance dy/dx (horizontal) or dx/dy (vertical).
Edges clipped by the domain boundary are corrected in the usual cut-cell
way: an edge reaching a Dirichlet wall is shortened to the wall (divide by
the cut fraction theta); an edge meeting an insulating wall, or with a wall
between its two cell centers, is dropped, which is the energy form of a
mirrored ghost cell.  Cell-centered placement means a wall lying exactly on
a cell face is cut at theta = 1/2, so grid-aligned rectangles are
reproduced exactly.

Wall locations come from bisection on inside/outside indicator functions,
so any geometry that can answer membership queries can be gridded; there is
no meshing step.  Each boundary edge remembers which plate it reaches, so
the assembly never has to guess Dirichlet values from neighboring cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SolverError
from .geometry import Box, Quadrilateral

# cell labels
FREE = 0
DIR0 = 1
DIR1 = 2
EXTERIOR = 3
NEUMANN = 4  # free cell with an insulated side (informational)

# per-edge plate class; NONE covers interior and dropped edges
CLS_NONE = -1
CLS_D0 = 0
CLS_D1 = 1
CLS_INSULATED = 2

MAX_UNKNOWNS = 40_000_000
_THETA_MIN = 1e-3
_BISECT_ITERS = 45


@dataclass(frozen=True)
class GridSpec:
    """Cell-centered grid: nx x ny cells of size dx x dy anchored at (x0, y0)."""

    x0: float
    y0: float
    dx: float
    dy: float
    nx: int
    ny: int

    @property
    def centers_x(self) -> np.ndarray:
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def centers_y(self) -> np.ndarray:
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dy

    @property
    def cells(self) -> int:
        return self.nx * self.ny


@dataclass
class GridCondenser:
    """Labeled grid plus cut-corrected edge conductances.

    edge_h[j, i] couples cells (j, i) and (j, i+1); edge_v[j, i] couples
    (j, i) and (j+1, i); zero means no coupling.  class_h / class_v record
    which plate a boundary edge reaches, so Dirichlet values attach to
    edges rather than to ghost cells.  The resistor-network route uses the
    labels alone and ignores the cut corrections entirely.
    """

    spec: GridSpec
    labels: np.ndarray
    edge_h: np.ndarray
    edge_v: np.ndarray
    class_h: np.ndarray
    class_v: np.ndarray
    box: Box

    @property
    def unknown_mask(self) -> np.ndarray:
        return (self.labels == FREE) | (self.labels == NEUMANN)

    @property
    def unknown_count(self) -> int:
        return int(np.count_nonzero(self.unknown_mask))


@dataclass(frozen=True)
class RingProblem:
    """Condenser between two plates; the field region is everything else.

    bounded=True means the plates enclose the field region (round annulus,
    square ring) and the grid box needs only a ghost pad; otherwise the
    field extends to infinity and the solver truncates it with an expanding
    margin around data_box.
    """

    plate0: Callable
    plate1: Callable
    data_box: Box
    min_gap: float
    bounded: bool = False
    margin0: float = 0.0


@dataclass(frozen=True)
class QuadProblem:
    """Mixed Dirichlet/Neumann problem on a Jordan domain with four sides.

    inside(x, y) answers domain membership; classify(px, py) assigns wall
    points to the value-0 plate (0), the value-1 plate (1) or an insulating
    side (2).  align_x lists x-values that must land on cell faces (the
    gate verticals of a split channel).  pad_box=True asks the solver to
    pad the box by a couple of ghost cells; exterior problems instead treat
    the box itself as an insulating truncation hull.
    """

    inside: Callable
    classify: Callable
    box: Box
    min_gap: float
    align_x: tuple = ()
    pad_box: bool = True


# ---------------------------------------------------------------------------
# geometry probes

def _bisect_wall(indicator, x_in, y_in, x_out, y_out, iters: int = _BISECT_ITERS):
    """Wall crossing between matched inside/outside point pairs.

    Returns (t, qx, qy): t in (0, 1] is the cut fraction measured from the
    inside point, and (qx, qy) is a point just beyond the wall, safe for
    asking which plate lies behind it.
    """
    t_lo = np.zeros(np.shape(x_in))
    t_hi = np.ones(np.shape(x_in))
    for _ in range(iters):
        t_mid = 0.5 * (t_lo + t_hi)
        px = x_in + t_mid * (x_out - x_in)
        py = y_in + t_mid * (y_out - y_in)
        inside = indicator(px, py)
        t_lo = np.where(inside, t_mid, t_lo)
        t_hi = np.where(inside, t_hi, t_mid)
    t = 0.5 * (t_lo + t_hi)
    return t, x_in + t_hi * (x_out - x_in), y_in + t_hi * (y_out - y_in)


def points_in_polygon(vertices: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Even-odd membership test, vectorized over query points."""
    v = np.asarray(vertices, dtype=float)
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    inside = np.zeros(px.shape, dtype=bool)
    x1, y1 = v[:, 0], v[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    for k in range(v.shape[0]):
        if y1[k] == y2[k]:
            continue
        spans = (y1[k] <= py) != (y2[k] <= py)
        if not np.any(spans):
            continue
        xx = x1[k] + (py - y1[k]) * (x2[k] - x1[k]) / (y2[k] - y1[k])
        inside ^= spans & (xx > px)
    return inside


def chain_distance(chain: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Distance from each query point to a polyline chain."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    best = np.full(px.shape, np.inf)
    for k in range(chain.shape[0] - 1):
        ax, ay = chain[k]
        bx, by = chain[k + 1]
        vx, vy = bx - ax, by - ay
        denom = vx * vx + vy * vy
        if denom == 0.0:
            d2 = (px - ax) ** 2 + (py - ay) ** 2
        else:
            t = np.clip(((px - ax) * vx + (py - ay) * vy) / denom, 0.0, 1.0)
            d2 = (px - (ax + t * vx)) ** 2 + (py - (ay + t * vy)) ** 2
        np.minimum(best, d2, out=best)
    return np.sqrt(best)


def quad_problem_from_polyline(quad: Quadrilateral) -> QuadProblem:
    """Wrap a polyline quadrilateral in indicator/classifier closures.

    Wall points are assigned to whichever of the four sides they are
    nearest to; sides 0 and 2 are the plates.  Exterior quads are clipped
    by their stored box, which acts as an insulating hull.
    """
    quad.validate()
    v = quad.vertices
    arcs = quad.arcs()

    if quad.exterior:
        box = quad.clip_box

        def inside(px, py):
            return box.contains(px, py) & ~points_in_polygon(v, px, py)
    else:
        bx0, by0 = v.min(axis=0)
        bx1, by1 = v.max(axis=0)
        box = Box(float(bx0), float(bx1), float(by0), float(by1))

        def inside(px, py):
            return points_in_polygon(v, px, py)

    def classify(px, py):
        d = np.stack([chain_distance(arcs[k], px, py) for k in range(4)])
        nearest = np.argmin(d, axis=0)
        out = np.full(np.shape(px), CLS_INSULATED, dtype=np.int8)
        out[nearest == 0] = CLS_D0
        out[nearest == 2] = CLS_D1
        return out

    # resolution driver: separation of the two plates, capped by the box size
    gap = float(min(chain_distance(arcs[0], arcs[2][:, 0], arcs[2][:, 1]).min(),
                    chain_distance(arcs[2], arcs[0][:, 0], arcs[0][:, 1]).min()))
    gap = min(gap, min(box.width, box.height))
    return QuadProblem(inside=inside, classify=classify, box=box,
                       min_gap=gap, pad_box=not quad.exterior)


# ---------------------------------------------------------------------------
# condenser assembly

def _grid_for_box(box: Box, dx: float, dy: float, align_x: tuple = ()) -> GridSpec:
    if align_x:
        # shift the origin so the alignment verticals land on cell faces
        phase = (align_x[0] - box.x0) % dx
        x0 = box.x0 + phase - dx if phase > 1e-12 * dx else box.x0
    else:
        x0 = box.x0
    nx = int(math.ceil((box.x1 - x0) / dx - 1e-12))
    ny = int(math.ceil((box.y1 - box.y0) / dy - 1e-12))
    if nx <= 0 or ny <= 0:
        raise SolverError("degenerate", "empty grid box")
    if nx * ny > MAX_UNKNOWNS:
        raise SolverError("budget", f"grid of {nx} x {ny} cells exceeds the "
                                    f"{MAX_UNKNOWNS:,} cell budget")
    return GridSpec(x0, box.y0, dx, dy, nx, ny)


def build_ring_condenser(problem: RingProblem, box: Box, dx: float, dy: float) -> GridCondenser:
    spec = _grid_for_box(box, dx, dy)
    cx, cy = np.meshgrid(spec.centers_x, spec.centers_y)
    in0 = problem.plate0(cx, cy)
    in1 = problem.plate1(cx, cy)
    del cx, cy
    if np.any(in0 & in1):
        raise SolverError("touching", "plate indicators overlap")
    labels = np.zeros((spec.ny, spec.nx), dtype=np.int8)
    labels[in0] = DIR0
    labels[in1] = DIR1
    if not (np.any(in0) and np.any(in1)):
        raise SolverError("degenerate",
                          "a plate has no cells at this resolution; refine the grid")

    def inside_domain(px, py):
        return ~(problem.plate0(px, py) | problem.plate1(px, py))

    def wall_class(qx, qy):
        # the probe point sits just behind the wall, inside exactly one plate
        return np.where(problem.plate0(qx, qy), CLS_D0, CLS_D1).astype(np.int8)

    return _finish_condenser(spec, labels, inside_domain, wall_class, box)


def build_quad_condenser(problem: QuadProblem, box: Box, dx: float, dy: float) -> GridCondenser:
    spec = _grid_for_box(box, dx, dy, problem.align_x)
    cx, cy = np.meshgrid(spec.centers_x, spec.centers_y)
    member = problem.inside(cx, cy)
    del cx, cy
    if not np.any(member):
        raise SolverError("degenerate", "no free cells at this resolution")
    labels = np.full((spec.ny, spec.nx), EXTERIOR, dtype=np.int8)
    labels[member] = FREE
    return _finish_condenser(spec, labels, problem.inside, problem.classify, box)


def _finish_condenser(spec: GridSpec, labels: np.ndarray, inside_domain,
                      wall_class, box: Box) -> GridCondenser:
    """Shared cut-cell pass assigning a conductance to every grid edge.

    The free side of each boundary edge is bisected against the domain
    indicator; the wall position fixes the cut fraction and a probe just
    beyond it fixes the plate class.  Unlabeled neighbors also inherit a
    ghost plate label so the staircase network route can see the plates.
    """
    ny, nx = labels.shape
    cxs, cys = spec.centers_x, spec.centers_y

    edge_h = np.zeros((ny, nx - 1))
    edge_v = np.zeros((ny - 1, nx))
    class_h = np.full((ny, nx - 1), CLS_NONE, dtype=np.int8)
    class_v = np.full((ny - 1, nx), CLS_NONE, dtype=np.int8)

    for axis in ("h", "v"):
        if axis == "h":
            la, lb = labels[:, :-1], labels[:, 1:]
            weights, classes, base = edge_h, class_h, spec.dy / spec.dx
            ax_, ay_ = np.meshgrid(cxs[:-1], cys)
            bx_, by_ = ax_ + spec.dx, ay_
        else:
            la, lb = labels[:-1, :], labels[1:, :]
            weights, classes, base = edge_v, class_v, spec.dx / spec.dy
            ax_, ay_ = np.meshgrid(cxs, cys[:-1])
            bx_, by_ = ax_, ay_ + spec.dy

        fa = (la == FREE)
        fb = (lb == FREE)

        # free-free edges: full weight unless the wall passes between the
        # two centers (detected at the midpoint), in which case the edge is
        # dropped like a mirrored Neumann ghost
        ff = fa & fb
        if np.any(ff):
            fmx = 0.5 * (ax_[ff] + bx_[ff])
            fmy = 0.5 * (ay_[ff] + by_[ff])
            mid_in = inside_domain(fmx, fmy)
            weights[ff] = np.where(mid_in, base, 0.0)

        # free-nonfree edges: bisect for the cut fraction and the plate class
        for free_side, other_free, swap in ((fa, fb, False), (fb, fa, True)):
            hit = free_side & ~other_free
            if not np.any(hit):
                continue
            if swap:
                xi, yi, xo, yo = bx_[hit], by_[hit], ax_[hit], ay_[hit]
            else:
                xi, yi, xo, yo = ax_[hit], ay_[hit], bx_[hit], by_[hit]
            t, qx, qy = _bisect_wall(inside_domain, xi, yi, xo, yo)
            cls = np.asarray(wall_class(qx, qy), dtype=np.int8)
            theta = np.maximum(t, _THETA_MIN)
            weights[hit] = np.where(cls == CLS_INSULATED, 0.0, base / theta)
            classes[hit] = np.where(cls == CLS_INSULATED, CLS_NONE, cls).astype(np.int8)
            # ghost plate labels for the network route; first claim wins at
            # contested corners (the edge classes stay exact regardless)
            out_lab = la if swap else lb
            cur = out_lab[hit]
            if np.any(cur == EXTERIOR):
                ghost = np.where(cls == CLS_D0, DIR0,
                                 np.where(cls == CLS_D1, DIR1, EXTERIOR)).astype(np.int8)
                out_lab[hit] = np.where(cur == EXTERIOR, ghost, cur)

    # adjacent plate cells of opposite sign short the condenser
    for la, lb in ((labels[:, :-1], labels[:, 1:]), (labels[:-1, :], labels[1:, :])):
        if np.any(((la == DIR0) & (lb == DIR1)) | ((la == DIR1) & (lb == DIR0))):
            raise SolverError("touching", "the two plates touch at this resolution")

    _mark_insulated(labels, edge_h, edge_v)
    return GridCondenser(spec, labels, edge_h, edge_v, class_h, class_v, box)


def _mark_insulated(labels: np.ndarray, edge_h: np.ndarray, edge_v: np.ndarray) -> None:
    """Relabel free cells with a dropped interior edge or a hull side."""
    free = labels == FREE
    mask = np.zeros_like(free)
    mask[:, :-1] |= edge_h == 0.0
    mask[:, 1:] |= edge_h == 0.0
    mask[:-1, :] |= edge_v == 0.0
    mask[1:, :] |= edge_v == 0.0
    mask[:, 0] = True
    mask[:, -1] = True
    mask[0, :] = True
    mask[-1, :] = True
    labels[mask & free] = NEUMANN
