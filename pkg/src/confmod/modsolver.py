"""Modulus estimation by finite-volume energy minimization on grid ladders.

Ring and quadrilateral moduli are computed as 1/energy of the discrete
harmonic potential with plate values 0 and 1.  Each problem is solved on a
ladder of successively halved grids and Richardson-extrapolated; the spread
of the ladder doubles as an error estimate.  Unbounded ring problems are
truncated by a box that grows until the coarse-grid modulus stops moving.

A deliberately crude second route, `resistor_network_modulus`, ignores all
cut-cell corrections and treats the labeled grid as a plain resistor
network (unit edges between free cells, double edges into the plates).  It
converges to the same continuum limit only slowly, but it shares no
geometry correction code with the main route, which makes it a useful
cross-check oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from . import condenser as cn
from .condenser import (GridCondenser, QuadProblem, RingProblem,
                        build_quad_condenser, build_ring_condenser,
                        quad_problem_from_polyline)
from .errors import SolverError
from .geometry import Box, ChannelDomain, Quadrilateral, validate_domain

_AMG_MIN_UNKNOWNS = 40_000
_FINEST_CELL_TARGET = 4_000_000
_BOX_GROWTH = 1.5
_MAX_BOX_ROUNDS = 12


@dataclass(frozen=True)
class SolverOptions:
    """Grid ladder and linear solver knobs.

    h0 is the coarsest cell height; by default the narrowest feature gets
    gap_cells cells at the coarsest level.  aspect stretches cells
    horizontally (dx = aspect * dy) and defaults to a power of two matched
    to the box shape, at most 8.  box_rtol is the relative modulus change
    at which the truncation box of an unbounded problem counts as settled.
    """

    h0: float | None = None
    levels: int = 3
    gap_cells: int = 16
    aspect: int | None = None
    cg_tol: float = 1e-10
    cg_max_iters: int | None = None
    box_factor: float = 3.0
    box_rtol: float = 5e-3
    use_amg: bool | None = None

    @classmethod
    def from_flat(cls, flat: dict) -> "SolverOptions":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in flat.items() if k in known})


@dataclass(frozen=True)
class RichardsonFit:
    """Extrapolated limit of a refinement sequence.

    order is None when the sequence was too short or not monotone enough to
    fit one; the estimate then falls back to the finest value with the last
    increment as its error.
    """

    value: float
    error: float
    order: float | None
    fallback: bool


@dataclass(frozen=True)
class ModulusEstimate:
    """Ladder result: extrapolated modulus plus per-level diagnostics."""

    value: float
    error: float
    order: float | None
    samples: tuple[tuple[float, float], ...]  # (dy, modulus), coarse to fine
    unknowns: tuple[int, ...]
    iterations: tuple[int, ...]
    residuals: tuple[float, ...]

    def __float__(self) -> float:
        return self.value


def richardson(samples: list[tuple[float, float]]) -> RichardsonFit:
    """Fit v(h) = v* + C h^p to the last three ladder points.

    Levels need not halve exactly; the convergence order is solved from the
    two increments.  Sequences that are constant to rounding return the
    finest value with a near-zero error; non-monotone tails fall back to
    the finest value with the last increment as the error.
    """
    if not samples:
        raise ValueError("no samples to extrapolate")
    hs = [float(h) for h, _ in samples]
    vs = [float(v) for _, v in samples]
    if any(h2 >= h1 for h1, h2 in zip(hs, hs[1:])):
        raise ValueError("samples must be ordered coarse to fine")
    if len(vs) == 1:
        return RichardsonFit(vs[0], abs(vs[0]) * 1e-2, None, True)
    if len(vs) == 2:
        return RichardsonFit(vs[1], abs(vs[1] - vs[0]), None, True)

    h1, h2, h3 = hs[-3:]
    v1, v2, v3 = vs[-3:]
    d12, d23 = v1 - v2, v2 - v3
    scale = max(abs(v) for v in (v1, v2, v3))
    if abs(d23) <= 1e-13 * scale and abs(d12) <= 1e-13 * scale:
        return RichardsonFit(v3, max(abs(d23), 1e-15 * scale), None, False)
    if d12 * d23 <= 0 or abs(d23) >= abs(d12):
        return RichardsonFit(v3, abs(d23) if d23 else abs(d12), None, True)

    r1, r2 = h1 / h2, h2 / h3
    if abs(r1 - 2.0) < 1e-9 and abs(r2 - 2.0) < 1e-9:
        p = math.log2(d12 / d23)
    else:
        from scipy.optimize import brentq

        def mismatch(p):
            return (h1 ** p - h2 ** p) / (h2 ** p - h3 ** p) - d12 / d23

        try:
            p = brentq(mismatch, 0.05, 8.0, xtol=1e-12)
        except ValueError:
            return RichardsonFit(v3, abs(d23), None, True)
    if not (0.3 <= p <= 6.0):
        return RichardsonFit(v3, abs(d23), None, True)
    denom = (h2 / h3) ** p - 1.0
    vstar = v3 - d23 / denom
    return RichardsonFit(vstar, abs(vstar - v3), p, False)


# ---------------------------------------------------------------------------
# linear algebra

def _assemble(cond: GridCondenser):
    """Sparse SPD system for the unknown cells; returns (A, b, touch0, touch1).

    touch0/touch1 flag unknowns with an edge into plate 0/1, used for the
    connectivity check.  Dirichlet data enters through the per-edge classes,
    whose integer value is literally the plate potential.
    """
    mask = cond.unknown_mask
    m = int(np.count_nonzero(mask))
    idx = np.full(cond.labels.shape, -1, dtype=np.int32)
    idx[mask] = np.arange(m, dtype=np.int32)

    diag = np.zeros(m)
    b = np.zeros(m)
    touch0 = np.zeros(m, dtype=bool)
    touch1 = np.zeros(m, dtype=bool)
    rows, cols, vals = [], [], []

    pairs = ((cond.edge_h, cond.class_h, idx[:, :-1], idx[:, 1:]),
             (cond.edge_v, cond.class_v, idx[:-1, :], idx[1:, :]))
    for w, cls, ia, ib in pairs:
        live = w > 0.0
        interior = live & (cls == cn.CLS_NONE)
        if np.any(interior):
            p, q, ww = ia[interior], ib[interior], w[interior]
            if np.any(p < 0) or np.any(q < 0):
                raise SolverError("degenerate", "interior edge touches a non-free cell")
            rows.append(p)
            cols.append(q)
            vals.append(-ww)
            rows.append(q)
            cols.append(p)
            vals.append(-ww)
            diag += np.bincount(p, ww, minlength=m)
            diag += np.bincount(q, ww, minlength=m)
        plate = live & (cls != cn.CLS_NONE)
        if np.any(plate):
            pfree = np.where(ia[plate] >= 0, ia[plate], ib[plate])
            ww = w[plate]
            cc = cls[plate].astype(float)
            diag += np.bincount(pfree, ww, minlength=m)
            b += np.bincount(pfree, ww * cc, minlength=m)
            touch0[pfree[cls[plate] == cn.CLS_D0]] = True
            touch1[pfree[cls[plate] == cn.CLS_D1]] = True

    # isolated pockets get a unit diagonal and stay at zero potential
    diag[diag == 0.0] = 1.0
    if rows:
        off = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m, m))
        a = (off + sp.diags(diag)).tocsr()
    else:
        a = sp.diags(diag).tocsr()
    return a, b, touch0, touch1


def _check_connected(a: sp.csr_matrix, touch0: np.ndarray, touch1: np.ndarray) -> None:
    if not (touch0.any() and touch1.any()):
        raise SolverError("disconnected", "a plate is not reachable from the field region")
    n_comp, comp = csgraph.connected_components(a, directed=False)
    if n_comp == 1:
        return
    joined = set(np.unique(comp[touch0])) & set(np.unique(comp[touch1]))
    if not joined:
        raise SolverError("disconnected", "no path through the field region "
                                          "connects the two plates")


def _cg_solve(a: sp.csr_matrix, b: np.ndarray, opts: SolverOptions):
    n = a.shape[0]
    maxiter = opts.cg_max_iters or max(200, int(50.0 * math.sqrt(n)))
    use_amg = opts.use_amg if opts.use_amg is not None else n >= _AMG_MIN_UNKNOWNS

    precond = None
    if use_amg:
        try:
            import pyamg

            ml = pyamg.ruge_stuben_solver(a.tocsr())
            precond = ml.aspreconditioner(cycle="V")
        except Exception:
            precond = None
    if precond is None:
        inv_diag = 1.0 / a.diagonal()
        precond = spla.LinearOperator(a.shape, matvec=lambda x: inv_diag * x)

    count = {"n": 0}

    def cb(_xk):
        count["n"] += 1

    x, info = spla.cg(a, b, rtol=opts.cg_tol, atol=0.0, maxiter=maxiter,
                      M=precond, callback=cb)
    bnorm = float(np.linalg.norm(b))
    relres = float(np.linalg.norm(b - a @ x)) / bnorm if bnorm else 0.0
    if info != 0 and relres > 100.0 * opts.cg_tol:
        raise SolverError("divergence",
                          f"conjugate gradients stalled at relative residual "
                          f"{relres:.2e} after {count['n']} iterations")
    return x, count["n"], relres


def _edge_energy(cond: GridCondenser, ufull: np.ndarray) -> float:
    """Dirichlet energy of the cellwise potential, plate values read from
    the edge classes."""
    free = cond.unknown_mask
    total = 0.0
    pairs = ((cond.edge_h, cond.class_h, ufull[:, :-1], ufull[:, 1:],
              free[:, :-1]),
             (cond.edge_v, cond.class_v, ufull[:-1, :], ufull[1:, :],
              free[:-1, :]))
    for w, cls, ua, ub, free_a in pairs:
        live = w > 0.0
        du = np.zeros_like(w)
        interior = live & (cls == cn.CLS_NONE)
        du[interior] = (ub - ua)[interior]
        plate = live & (cls != cn.CLS_NONE)
        if np.any(plate):
            ufree = np.where(free_a, ua, ub)
            du[plate] = (cls.astype(float) - ufree)[plate]
        total += float(np.sum(w * du * du))
    return total


def solve_condenser(cond: GridCondenser, opts: SolverOptions):
    """Solve the discrete Dirichlet problem; returns (ufull, energy, iters,
    relres) with ufull the potential on the full grid (zero off-domain)."""
    a, b, touch0, touch1 = _assemble(cond)
    _check_connected(a, touch0, touch1)
    x, iters, relres = _cg_solve(a, b, opts)
    ufull = np.zeros(cond.labels.shape)
    ufull[cond.unknown_mask] = x
    energy = _edge_energy(cond, ufull)
    if energy <= 0.0:
        raise SolverError("disconnected", "zero field energy; the plates do not "
                                          "interact through the grid")
    return ufull, energy, iters, relres


# ---------------------------------------------------------------------------
# grid ladders

def _auto_aspect(span_x: float, span_y: float) -> int:
    ratio = max(span_x / max(span_y, 1e-300), 1.0)
    power = int(np.clip(round(math.log2(ratio)), 0, 3))
    return 1 << power


def _snap_dx(dx_target: float, align_x: tuple) -> float:
    if len(align_x) < 2:
        return dx_target
    span = max(align_x) - min(align_x)
    n = max(1, round(span / dx_target))
    return span / n


def _ladder(min_gap: float, opts: SolverOptions, box: Box, aspect: int,
            align_x: tuple = ()):
    """Per-level (dx, dy) pairs, coarse to fine, within the cell budget."""
    dy0 = opts.h0 if opts.h0 is not None else min_gap / opts.gap_cells
    if not (dy0 > 0 and math.isfinite(dy0)):
        raise SolverError("degenerate", f"invalid coarse cell size {dy0!r}")
    fine = dy0 / 2 ** (opts.levels - 1)
    est = (box.width / (aspect * fine)) * (box.height / fine)
    if est > _FINEST_CELL_TARGET:
        dy0 *= math.sqrt(est / _FINEST_CELL_TARGET)
    out = []
    for k in range(opts.levels):
        dy = dy0 / 2 ** k
        dx = _snap_dx(aspect * dy, align_x)
        out.append((dx, dy))
    return out


def _resolve_ring(problem) -> RingProblem:
    if isinstance(problem, ChannelDomain):
        return channel_ring_problem(problem)
    return problem


def _settle_box(problem: RingProblem, opts: SolverOptions, dx0: float,
                dy0: float, aspect: int) -> Box:
    """Grow the truncation margin of an unbounded ring until the coarse
    modulus stops moving by more than box_rtol."""
    data = problem.data_box
    margin = problem.margin0 or max(2.0 * problem.min_gap, 0.5 * data.height,
                                    4.0 * dy0)
    margin = max(margin, 2.0 * dy0, 2.0 * dx0 / aspect)
    prev = None
    for _ in range(_MAX_BOX_ROUNDS):
        box = data.expanded(margin)
        cond = build_ring_condenser(problem, box, dx0, dy0)
        _, energy, _, _ = solve_condenser(cond, opts)
        m = 1.0 / energy
        if prev is not None and abs(m - prev) <= opts.box_rtol * abs(m):
            return box
        prev = m
        margin *= _BOX_GROWTH
    raise SolverError("budget", "truncation box failed to settle; the field "
                                "region may be effectively unbounded")


def ring_modulus(problem, opts: SolverOptions | None = None) -> ModulusEstimate:
    """Modulus of a two-plate ring condenser (1 / capacity).

    Accepts a RingProblem or a ChannelDomain (whose two obstacle bands are
    the plates).  Unbounded problems are truncated by a settled box that is
    then held fixed across the refinement ladder.
    """
    problem = _resolve_ring(problem)
    opts = opts or SolverOptions()
    data = problem.data_box
    aspect = opts.aspect or _auto_aspect(data.width, data.height)

    dy_probe = (opts.h0 if opts.h0 is not None
                else problem.min_gap / opts.gap_cells)
    if problem.bounded:
        box = data.expanded(2.0 * aspect * dy_probe, 2.0 * dy_probe)
    else:
        box = _settle_box(problem, opts, aspect * dy_probe, dy_probe, aspect)

    steps = _ladder(problem.min_gap, opts, box, aspect)
    return _run_ladder(lambda dx, dy: build_ring_condenser(problem, box, dx, dy),
                       steps, opts)


def quad_modulus(problem, opts: SolverOptions | None = None) -> ModulusEstimate:
    """Modulus of a four-sided condenser: 1 / energy with the two plates
    held at 0 and 1 and the other two sides insulated.

    Accepts a QuadProblem or a polyline Quadrilateral.
    """
    if isinstance(problem, Quadrilateral):
        problem = quad_problem_from_polyline(problem)
    opts = opts or SolverOptions()
    aspect = opts.aspect or _auto_aspect(problem.box.width, problem.box.height)
    dy0 = opts.h0 if opts.h0 is not None else problem.min_gap / opts.gap_cells
    if problem.pad_box:
        box = problem.box.expanded(2.0 * aspect * dy0, 2.0 * dy0)
    else:
        box = problem.box
    steps = _ladder(problem.min_gap, opts, box, aspect, problem.align_x)
    return _run_ladder(lambda dx, dy: build_quad_condenser(problem, box, dx, dy),
                       steps, opts)


def conjugate_modulus(quad: Quadrilateral, opts: SolverOptions | None = None) -> ModulusEstimate:
    """Modulus of the same quadrilateral with the side roles rotated by one;
    in the continuum this is the reciprocal of the direct modulus."""
    return quad_modulus(quad.conjugate(), opts)


def _run_ladder(builder, steps, opts: SolverOptions) -> ModulusEstimate:
    samples, unknowns, iters, ress = [], [], [], []
    for dx, dy in steps:
        cond = builder(dx, dy)
        _, energy, it, res = solve_condenser(cond, opts)
        samples.append((dy, 1.0 / energy))
        unknowns.append(cond.unknown_count)
        iters.append(it)
        ress.append(res)
    fit = richardson(samples)
    return ModulusEstimate(value=fit.value, error=fit.error, order=fit.order,
                           samples=tuple(samples), unknowns=tuple(unknowns),
                           iterations=tuple(iters), residuals=tuple(ress))


def ring_condenser(problem, dy: float, opts: SolverOptions | None = None) -> GridCondenser:
    """Single grid condenser for a ring problem at cell height dy, using the
    same box policy as ring_modulus (useful for oracle comparisons)."""
    problem = _resolve_ring(problem)
    opts = opts or SolverOptions()
    data = problem.data_box
    aspect = opts.aspect or _auto_aspect(data.width, data.height)
    if problem.bounded:
        box = data.expanded(2.0 * aspect * dy, 2.0 * dy)
    else:
        box = _settle_box(problem, opts, aspect * dy, dy, aspect)
    return build_ring_condenser(problem, box, aspect * dy, dy)


def quad_condenser(problem, dy: float, opts: SolverOptions | None = None) -> GridCondenser:
    """Single grid condenser for a quadrilateral problem at cell height dy."""
    if isinstance(problem, Quadrilateral):
        problem = quad_problem_from_polyline(problem)
    opts = opts or SolverOptions()
    aspect = opts.aspect or _auto_aspect(problem.box.width, problem.box.height)
    dx = _snap_dx(aspect * dy, problem.align_x)
    if problem.pad_box:
        box = problem.box.expanded(2.0 * dx, 2.0 * dy)
    else:
        box = problem.box
    return build_quad_condenser(problem, box, dx, dy)


# ---------------------------------------------------------------------------
# the staircase resistor-network route

def resistor_network_modulus(cond: GridCondenser, opts: SolverOptions | None = None) -> float:
    """Modulus of the label grid read as a plain resistor network.

    Adjacent free cells are joined by a unit resistor (aspect-weighted on
    stretched grids); a free cell next to a plate cell connects to it with
    double conductance, the network analogue of the half-cell distance to
    the wall.  No cut-cell corrections are applied, so this route is
    independent of the boundary treatment above.
    """
    opts = opts or SolverOptions()
    labels = cond.labels
    free = cond.unknown_mask
    base_h = cond.spec.dy / cond.spec.dx
    base_v = cond.spec.dx / cond.spec.dy

    m = int(np.count_nonzero(free))
    idx = np.full(labels.shape, -1, dtype=np.int32)
    idx[free] = np.arange(m, dtype=np.int32)
    diag = np.zeros(m)
    b = np.zeros(m)
    touch0 = np.zeros(m, dtype=bool)
    touch1 = np.zeros(m, dtype=bool)
    rows, cols, vals = [], [], []

    pairs = ((base_h, labels[:, :-1], labels[:, 1:], idx[:, :-1], idx[:, 1:]),
             (base_v, labels[:-1, :], labels[1:, :], idx[:-1, :], idx[1:, :]))
    for base, la, lb, ia, ib in pairs:
        fa = (la == cn.FREE) | (la == cn.NEUMANN)
        fb = (lb == cn.FREE) | (lb == cn.NEUMANN)
        ff = fa & fb
        if np.any(ff):
            p, q = ia[ff], ib[ff]
            rows.append(p)
            cols.append(q)
            vals.append(np.full(p.shape, -base))
            rows.append(q)
            cols.append(p)
            vals.append(np.full(p.shape, -base))
            diag += np.bincount(p, np.full(p.shape, base), minlength=m)
            diag += np.bincount(q, np.full(p.shape, base), minlength=m)
        for fside, lother, iown in ((fa, lb, ia), (fb, la, ib)):
            for lab, val, touch in ((cn.DIR0, 0.0, touch0), (cn.DIR1, 1.0, touch1)):
                hit = fside & (lother == lab)
                if not np.any(hit):
                    continue
                p = iown[hit]
                w = 2.0 * base
                diag += np.bincount(p, np.full(p.shape, w), minlength=m)
                b += np.bincount(p, np.full(p.shape, w * val), minlength=m)
                touch[p] = True

    diag[diag == 0.0] = 1.0
    if rows:
        off = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(m, m))
        a = (off + sp.diags(diag)).tocsr()
    else:
        a = sp.diags(diag).tocsr()
    _check_connected(a, touch0, touch1)
    x, _, _ = _cg_solve(a, b, opts)

    ufull = np.zeros(labels.shape)
    ufull[free] = x
    energy = 0.0
    for base, la, lb, ua, ub in (
            (base_h, labels[:, :-1], labels[:, 1:], ufull[:, :-1], ufull[:, 1:]),
            (base_v, labels[:-1, :], labels[1:, :], ufull[:-1, :], ufull[1:, :])):
        fa = (la == cn.FREE) | (la == cn.NEUMANN)
        fb = (lb == cn.FREE) | (lb == cn.NEUMANN)
        ff = fa & fb
        energy += base * float(np.sum((ub[ff] - ua[ff]) ** 2))
        for fside, lother, uown in ((fa, lb, ua), (fb, la, ub)):
            for lab, val in ((cn.DIR0, 0.0), (cn.DIR1, 1.0)):
                hit = fside & (lother == lab)
                if np.any(hit):
                    energy += 2.0 * base * float(np.sum((val - uown[hit]) ** 2))
    if energy <= 0.0:
        raise SolverError("disconnected", "zero network energy")
    return 1.0 / energy


# ---------------------------------------------------------------------------
# channel condenser problems

def channel_ring_problem(dom: ChannelDomain) -> RingProblem:
    """The two obstacle bands as plates; the field region is the rest of
    the plane, truncated later by a settled box."""
    validate_domain(dom)
    data = dom.bounding_box()
    gap = dom.gap_min()
    return RingProblem(plate0=dom.lower_band, plate1=dom.upper_band,
                       data_box=data, min_gap=gap, bounded=False,
                       margin0=max(2.0 * gap, 0.75 * data.height))


def channel_quad_problems(dom: ChannelDomain, box: Box | None = None,
                          box_factor: float = 3.0) -> tuple[QuadProblem, QuadProblem]:
    """Fast-path problems for the two pieces of the ring split at x=c, x=d.

    Returns (channel piece, outer piece).  The channel piece runs between
    the two facing curves with its plates on the gate verticals; the outer
    piece is the rest of the ring with the same gates as plates (right gate
    first, matching the reversed marking of the polyline split) and an
    insulating truncation hull.
    """
    validate_domain(dom)
    c, d = dom.interval_inner
    f1, f2 = dom.outer_lower, dom.inner_upper
    gap = dom.gap_min()
    tol_x = 1e-6 * (d - c)
    bot, top = dom.vertical_extent()
    tol_y = 1e-6 * (top - bot)

    def f1c(x):
        return f1(np.clip(x, c, d))

    def f2c(x):
        return f2(np.clip(x, c, d))

    def inside_q(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (x > c) & (x < d) & (y > f2c(x)) & (y < f1c(x))

    def classify_q(px, py):
        out = np.full(np.shape(px), cn.CLS_INSULATED, dtype=np.int8)
        out[np.abs(px - c) < tol_x] = cn.CLS_D0
        out[np.abs(px - d) < tol_x] = cn.CLS_D1
        return out

    from .geometry import union_grid

    xs = union_grid((f1, f2), c, d, 1025)
    box_q = Box(c, d, float(np.min(f2(xs))), float(np.max(f1(xs))))
    quad_q = QuadProblem(inside=inside_q, classify=classify_q, box=box_q,
                         min_gap=gap, align_x=(c, d), pad_box=True)

    def inside_p(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        in_strip = (x >= c) & (x <= d) & (y >= f2c(x)) & (y <= f1c(x))
        return ~(dom.upper_band(x, y) | dom.lower_band(x, y) | in_strip)

    def classify_p(px, py):
        out = np.full(np.shape(px), cn.CLS_INSULATED, dtype=np.int8)
        on_gate_y = (py > f2c(px) - tol_y) & (py < f1c(px) + tol_y)
        out[(np.abs(px - d) < tol_x) & on_gate_y] = cn.CLS_D0
        out[(np.abs(px - c) < tol_x) & on_gate_y] = cn.CLS_D1
        return out

    if box is None:
        data = dom.bounding_box()
        margin = 0.5 * (box_factor - 1.0) * max(data.width, data.height)
        box = data.expanded(margin)
    quad_p = QuadProblem(inside=inside_p, classify=classify_p, box=box,
                         min_gap=gap, align_x=(c, d), pad_box=False)
    return quad_q, quad_p
