"""Closed-form layer: channel asymptotics, ring anchors, explicit maps.

Everything here is exact arithmetic or controlled quadrature; no grids.  The
central quantity is gamma, the integral of the reciprocal channel gap: a long
horizontal stretch by H sends the ring modulus to 1/(gamma*H), and the grid
solver is audited against that prediction.  The remaining functions are the
reference maps used by the audits: the Grotzsch ring function and Teichmuller
ring modulus (extremal-ring anchors), a Mobius map normalizing an off-center
circle pair to a round annulus, the vertical-strip end map built from
sqrt((z+1)/(z-1)), and the piecewise-linear shear with its dilatation bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainValidationError
from .geometry import ChannelDomain, union_grid

__all__ = [
    "GammaValue", "gamma", "asymptotic_prediction", "annulus_modulus",
    "grotzsch_mu", "teichmuller_modulus", "r_of_rho", "mobius_psi",
    "halfplane_to_U", "halfplane_to_U_by_quadrature",
    "ShearParams", "shear_eta", "shear_eta_inverse", "shear_is_continuous",
    "shear_dilatation", "adaptive_gauss_kronrod",
]


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod 15(7) quadrature

_GK_X = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_GK_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
# Embedded 7-point Gauss rule: nodes 1, 3, 5, 7 of the Kronrod set.
_G7_IDX = np.array([1, 3, 5, 7])
_G7_W = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
])

_GK_NODES = np.concatenate([-_GK_X[:-1], _GK_X[::-1]])          # 15 ascending
_GK_WEIGHTS = np.concatenate([_GK_WK[:-1], _GK_WK[::-1]])
_G7_NODES_MASK = np.zeros(15, dtype=bool)
_G7_NODES_MASK[[1, 3, 5, 7, 9, 11, 13]] = True
_G7_WEIGHTS = np.concatenate([_G7_W[:-1], _G7_W[::-1]])


def _gk15(f, a: float, b: float):
    mid, hw = 0.5 * (a + b), 0.5 * (b - a)
    fv = np.asarray(f(mid + hw * _GK_NODES))
    kron = hw * np.sum(_GK_WEIGHTS * fv)
    gauss = hw * np.sum(_G7_WEIGHTS * fv[_G7_NODES_MASK])
    return kron, abs(kron - gauss)


def adaptive_gauss_kronrod(f, a: float, b: float, abs_tol: float = 1e-12,
                           max_intervals: int = 4096):
    """Integrate f over [a, b] to abs_tol; returns (value, error_estimate).

    f must accept a numpy array of abscissae; complex integrands are fine.
    Bisects the interval with the worst Kronrod-vs-Gauss discrepancy until
    the summed estimate meets the tolerance.
    """
    val, err = _gk15(f, a, b)
    pieces = [(err, a, b, val)]
    while sum(p[0] for p in pieces) > abs_tol and len(pieces) < max_intervals:
        pieces.sort(key=lambda p: p[0])
        _, pa, pb, _ = pieces.pop()
        pm = 0.5 * (pa + pb)
        pieces.append((*_piece(f, pa, pm),))
        pieces.append((*_piece(f, pm, pb),))
    total_err = sum(p[0] for p in pieces)
    if total_err > abs_tol:
        raise ArithmeticError(f"quadrature failed to reach abs_tol={abs_tol:g} "
                              f"(error estimate {total_err:g})")
    return sum(p[3] for p in pieces), total_err


def _piece(f, a, b):
    val, err = _gk15(f, a, b)
    return err, a, b, val


# ---------------------------------------------------------------------------
# gamma: the reciprocal-gap integral of the channel

@dataclass(frozen=True)
class GammaValue:
    """Reciprocal-gap integral with its quadrature error bound (0 if exact)."""

    value: float
    error: float = 0.0

    def __float__(self) -> float:
        return self.value


def _piecewise_affine(f) -> bool:
    """True when f is exactly linear between its own sample abscissae."""
    if f.kind == "samples":
        return True
    return f.kind == "polynomial" and all(c == 0.0 for c in f.params[2:])


def gamma(dom: ChannelDomain, abs_tol: float = 1e-10) -> GammaValue:
    """Integral of 1/(outer_lower - inner_upper) over the inner interval.

    Pairs with a piecewise-linear gap (sampled walls, affine polynomials)
    are integrated in closed form, since the reciprocal of a linear gap
    integrates to a log; curved builtin walls use adaptive Gauss-Kronrod
    per smooth piece to abs_tol.
    """
    c, d = dom.interval_inner
    top, bot = dom.outer_lower, dom.inner_upper
    xs = union_grid((top, bot), c, d)
    gap = top(xs) - bot(xs)
    if np.min(gap) <= 0.0:
        k = int(np.argmin(gap))
        raise DomainValidationError(
            [f"nonpositive-gap: channel gap {gap[k]:.3g} at x={xs[k]:.6g}"])

    if _piecewise_affine(top) and _piecewise_affine(bot):
        # Exact: on each piece the gap is linear, integral of 1/(alpha*x+beta).
        # log1p keeps nearly-flat pieces from cancelling; dg == 0 is the
        # constant-gap limit of the same formula.
        x0, x1 = xs[:-1], xs[1:]
        g0, g1 = gap[:-1], gap[1:]
        dx = x1 - x0
        dg = g1 - g0
        with np.errstate(divide="ignore", invalid="ignore"):
            sloped = dx * np.log1p(dg / g0) / dg
        total = float(np.sum(np.where(dg == 0.0, dx / g0, sloped)))
        return GammaValue(total, 0.0)

    def integrand(x):
        return 1.0 / (top(x) - bot(x))

    total = 0.0
    err_total = 0.0
    piece_tol = abs_tol / max(1, len(xs) - 1)
    for x0, x1 in zip(xs[:-1], xs[1:]):
        v, e = adaptive_gauss_kronrod(integrand, float(x0), float(x1), piece_tol)
        total += v
        err_total += e
    return GammaValue(float(total), float(err_total))


def asymptotic_prediction(gamma_value: "GammaValue | float", H: float) -> float:
    """Predicted ring modulus 1/(gamma*H) of the H-stretched channel."""
    g = float(gamma_value)
    if g <= 0 or H <= 0:
        raise ValueError("gamma and H must be positive")
    return 1.0 / (g * H)


# ---------------------------------------------------------------------------
# ring anchors

def annulus_modulus(r: float, R: float) -> float:
    """Modulus log(R/r)/(2*pi) of the round annulus r < |z| < R."""
    if not (0 < r < R):
        raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
    return math.log(R / r) / (2.0 * math.pi)


def _agm(a: float, b: float) -> float:
    while abs(a - b) > 1e-15 * a:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def grotzsch_mu(r: float) -> float:
    """Modulus parameter mu(r) = (pi/2) K(r')/K(r) of the Grotzsch ring.

    Computed via the arithmetic-geometric mean, K(k) = pi/(2*agm(1, k')).
    mu(1/sqrt(2)) = pi/2; mu(r) ~ log(4/r) for small r.
    """
    if not (0.0 < r < 1.0):
        raise ValueError(f"need 0 < r < 1, got {r}")
    rp = math.sqrt((1.0 - r) * (1.0 + r))
    return 0.5 * math.pi * _agm(1.0, rp) / _agm(1.0, r)


def teichmuller_modulus(t: float) -> float:
    """Modulus of the ring complementary to [-1, 0] and [t, inf).

    Equals mu(1/sqrt(1+t))/pi; the classical 2*pi*mod ~ log(16 t) growth is
    the large-t anchor used by the acceptance checks.
    """
    if t <= 0:
        raise ValueError(f"need t > 0, got {t}")
    return grotzsch_mu(1.0 / math.sqrt(1.0 + t)) / math.pi


# ---------------------------------------------------------------------------
# Mobius normalization of an off-center circle pair

def r_of_rho(rho: float) -> float:
    """Diameter r of the inner circle through 0 paired with target radius rho."""
    if rho <= 1.0:
        raise ValueError(f"need rho > 1, got {rho}")
    return 2.0 * rho / (1.0 + rho * rho)


def mobius_psi(rho: float, zeta):
    """Mobius map rho*(rho*zeta + i)/(zeta + i*rho).

    Sends the unit circle to |w| = rho and the circle |zeta + i*r/2| = r/2
    (r = r_of_rho(rho)) to |w| = 1, so the off-center ring between them maps
    onto the round annulus 1 < |w| < rho.
    """
    if rho <= 1.0:
        raise ValueError(f"need rho > 1, got {rho}")
    z = np.asarray(zeta, dtype=complex)
    out = rho * (rho * z + 1j) / (z + 1j * rho)
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# strip-end map of the lower half-plane

def _sqrt_cut_up(w: np.ndarray) -> np.ndarray:
    """Square root with branch cut along the upward ray from the origin.

    arg is taken in (-3*pi/2, pi/2], so the map is analytic across the
    negative real axis approached from below and agrees with the principal
    root on the right half-plane.
    """
    theta = np.angle(w)
    theta = np.where(theta > 0.5 * math.pi, theta - 2.0 * math.pi, theta)
    return np.sqrt(np.abs(w)) * np.exp(0.5j * theta)


def _signed_zero_down(z: np.ndarray) -> np.ndarray:
    """Replace +0.0 imaginary parts by -0.0 so angles resolve lower-side."""
    mask = z.imag == 0.0
    if np.any(mask):
        fixed = np.empty(np.count_nonzero(mask), dtype=complex)
        fixed.real = z.real[mask]
        fixed.imag = -0.0
        z[mask] = fixed
    return z


def _force_lower_side(zeta) -> np.ndarray:
    z = np.array(zeta, dtype=complex, copy=True, ndmin=1)
    if np.any(np.isnan(z.real) | np.isnan(z.imag)):
        raise ValueError("NaN input")
    if np.any(z.imag > 0.0):
        raise ValueError("input must lie in the closed lower half-plane")
    return _signed_zero_down(z)


def halfplane_to_U(M: float, zeta):
    """Conformal map of the lower half-plane onto a half-plane with a strip end.

    g(z) = (M/pi) * (sqrt(z^2-1) + log(z + sqrt(z^2-1))) with
    sqrt(z^2-1) = sqrt(z-1)*sqrt(z+1), each factor cut upward from its branch
    point.  Boundary values: g(1) = 0, g(-1) = -i*M, the segment (-1, 1) goes
    to the vertical slot between them, the ray left of -1 to the horizontal
    line at depth -M, and g(z) ~ (M/pi) z far away.  Real inputs are treated
    as lower-side limits.
    """
    if M <= 0:
        raise ValueError(f"need M > 0, got {M}")
    z = _force_lower_side(zeta)
    s = _sqrt_cut_up(z - 1.0) * _sqrt_cut_up(z + 1.0)
    # The log argument can land exactly on the negative real axis (e.g. at
    # z = -1 where s degenerates to +0j); keep it on the lower side too.
    out = (M / math.pi) * (s + np.log(_signed_zero_down(z + s)))
    return out if np.ndim(zeta) else complex(out[0])


def halfplane_to_U_by_quadrature(M: float, zeta, abs_tol: float = 1e-12):
    """Independent evaluation of halfplane_to_U by contour quadrature.

    Integrates sqrt((w+1)/(w-1)) along the straight contour from 1 to z,
    with the substitution w = 1 + s^2 (z-1) that removes the inverse-sqrt
    endpoint singularity:

        g(z) = (M/pi) * 2 * sqrt(z-1) * integral_0^1 sqrt(1 + s^2(z-1) + 1) ds

    using the same upward branch cuts.  Used as the oracle for the closed
    form; scalar input only.
    """
    if M <= 0:
        raise ValueError(f"need M > 0, got {M}")
    z = _force_lower_side(zeta)[0]
    front = 2.0 * _sqrt_cut_up(np.asarray(z - 1.0))

    def integrand(s):
        return _sqrt_cut_up(2.0 + s * s * (z - 1.0))

    val, _ = adaptive_gauss_kronrod(integrand, 0.0, 1.0, abs_tol)
    return complex((M / math.pi) * front * val)


# ---------------------------------------------------------------------------
# piecewise-linear shear

@dataclass(frozen=True)
class ShearParams:
    """Three boundary lines y = a_k x + b_k, a vertical offset, and the two
    x-breakpoints (before stretching) where the pieces meet."""

    lines: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    offset: float
    break_lo: float
    break_hi: float

    def __post_init__(self):
        if len(self.lines) != 3 or any(len(p) != 2 for p in self.lines):
            raise ValueError("lines must be three (slope, intercept) pairs")
        if self.offset <= 0:
            raise ValueError("offset must be positive")
        if not self.break_lo < self.break_hi:
            raise ValueError("break_lo must be less than break_hi")

    @property
    def max_slope(self) -> float:
        return max(abs(a) for a, _ in self.lines)


def _shear_pieces(p: ShearParams, H: float, x: np.ndarray) -> np.ndarray:
    """Vertical shift subtracted from y in each piece, at stretched abscissa x."""
    (a1, b1), (a2, b2), (a3, b3) = p.lines
    return np.select(
        [x <= H * p.break_lo, x <= H * p.break_hi],
        [(a1 / H) * x + b1, (a2 / H) * x + b2 + p.offset],
        default=(a3 / H) * x + b3)


def shear_eta(p: ShearParams, H: float, z):
    """Piecewise vertical shear x + iy -> x + i(y - shift_k(x/H)).

    Flattens the three boundary lines of the sheared comparison strip onto
    horizontal lines; the middle piece is additionally lowered by the offset.
    A homeomorphism exactly when shear_is_continuous(p) holds.
    """
    if H <= 0:
        raise ValueError(f"need H > 0, got {H}")
    zz = np.asarray(z, dtype=complex)
    out = zz.real + 1j * (zz.imag - _shear_pieces(p, H, zz.real))
    return out if out.ndim else complex(out)


def shear_eta_inverse(p: ShearParams, H: float, w):
    if H <= 0:
        raise ValueError(f"need H > 0, got {H}")
    ww = np.asarray(w, dtype=complex)
    out = ww.real + 1j * (ww.imag + _shear_pieces(p, H, ww.real))
    return out if out.ndim else complex(out)


def shear_is_continuous(p: ShearParams, tol: float = 1e-12) -> bool:
    """True when the three pieces agree at the breakpoints.

    The matching conditions a1*c + b1 = a2*c + b2 + offset (and likewise at
    the other breakpoint with line 3) do not involve H: continuity for one
    stretch factor implies it for all.
    """
    (a1, b1), (a2, b2), (a3, b3) = p.lines
    c, d = p.break_lo, p.break_hi
    scale = max(1.0, abs(b1), abs(b2), abs(b3), p.offset)
    return (abs(a1 * c + b1 - (a2 * c + b2 + p.offset)) <= tol * scale
            and abs(a3 * d + b3 - (a2 * d + b2 + p.offset)) <= tol * scale)


def shear_dilatation(p: ShearParams, H: float) -> float:
    """Maximal dilatation K(H) = (1+k)/(1-k), k = a/sqrt(a^2 + 4H^2).

    a is the largest absolute boundary slope; K decreases to 1 as H grows,
    so the sheared and straight strips become conformally indistinguishable.
    """
    if H <= 0:
        raise ValueError(f"need H > 0, got {H}")
    a = p.max_slope
    if a == 0.0:
        return 1.0
    k = a / math.hypot(a, 2.0 * H)
    return (1.0 + k) / (1.0 - k)
