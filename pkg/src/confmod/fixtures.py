"""Benchmark domains and condenser problems shared by tests and the CLI.

Three channel domains cover the interesting regimes: `frame` is mirror
symmetric with a constant channel gap (its gamma is exactly 0.8), `wavy`
has a sine-bump channel roof between two curved lens obstacles and no
symmetry at all, and `tilted` has a linearly growing gap so gamma is a
logarithm rather than a ratio.  The ring problems below are the classical
anchors with known moduli.
"""

from __future__ import annotations

import math

import numpy as np

from .condenser import RingProblem
from .errors import ConfigError
from .geometry import Box, BoundaryFunction, ChannelDomain, Quadrilateral, validate_domain

FIXTURE_NAMES = ("frame", "wavy", "tilted")

# gamma values at H=1; frame and tilted are closed forms, wavy is frozen
# from an independent adaptive quadrature of 1/gap over the sampled roof
FRAME_GAMMA = 0.8
TILTED_GAMMA = 2.5 * math.log(1.5)


def frame_domain() -> ChannelDomain:
    """Mirror-symmetric trapezoid frame with a constant channel gap.

    The channel is the exact rectangle [-0.5, 0.5] x [-0.625, 0.625], so
    gamma = 1/1.25 = 0.8 and the channel quadrilateral is grid-exact.
    """
    f1 = BoundaryFunction.constant(0.625, -1.0, 1.0)
    g1 = BoundaryFunction.from_samples(
        [(-1.0, 0.625), (-0.8, 1.625), (0.8, 1.625), (1.0, 0.625)])
    f2 = BoundaryFunction.constant(-0.625, -0.5, 0.5)
    g2 = BoundaryFunction.from_samples(
        [(-0.5, -0.625), (-0.4, -1.625), (0.4, -1.625), (0.5, -0.625)])
    return validate_domain(ChannelDomain(outer_upper=g1, outer_lower=f1,
                                         inner_upper=f2, inner_lower=g2))


def wavy_domain(n_samples: int = 1025) -> ChannelDomain:
    """Nonsymmetric channel: sampled sine-bump roof over a flat floor.

    The upper obstacle is a lens between the roof and a circular arc over
    [-0.5, 1.5]; the lower obstacle is a half-disk hanging under the floor
    on [0, 1].  The roof is merely continuous as far as the config schema
    is concerned, so it is stored as samples.
    """
    xs = np.linspace(-0.5, 1.5, n_samples)
    roof = 1.0 + 0.3 * np.sin(math.pi * xs)
    f1 = BoundaryFunction.from_samples(np.column_stack([xs, roof]))
    # arc through the roof endpoints (both at height 0.7), bulging upward
    g1 = BoundaryFunction.semicircle(0.5, 0.7, 1.0, "upper")
    f2 = BoundaryFunction.constant(0.0, 0.0, 1.0)
    g2 = BoundaryFunction.semicircle(0.5, 0.0, 0.5, "lower")
    return validate_domain(ChannelDomain(outer_upper=g1, outer_lower=f1,
                                         inner_upper=f2, inner_lower=g2))


def tilted_domain() -> ChannelDomain:
    """Tilted strip: the gap grows linearly from 0.8 to 1.2 across the
    channel, so gamma = 2.5 * ln(1.5) exactly."""
    f1 = BoundaryFunction.polynomial([0.8, 0.4], -0.5, 1.5)
    g1 = BoundaryFunction.from_samples(
        [(-0.5, 0.6), (-0.3, 2.0), (1.3, 2.0), (1.5, 1.4)])
    f2 = BoundaryFunction.constant(0.0, 0.0, 1.0)
    g2 = BoundaryFunction.from_samples(
        [(0.0, 0.0), (0.1, -0.9), (0.9, -0.9), (1.0, 0.0)])
    return validate_domain(ChannelDomain(outer_upper=g1, outer_lower=f1,
                                         inner_upper=f2, inner_lower=g2))


def named_domain(name: str) -> ChannelDomain:
    builders = {"frame": frame_domain, "wavy": wavy_domain, "tilted": tilted_domain}
    try:
        return builders[name]()
    except KeyError:
        raise ConfigError(f"unknown fixture {name!r}; choose from "
                          f"{', '.join(FIXTURE_NAMES)}") from None


# ---------------------------------------------------------------------------
# classical ring anchors

def annulus_problem(r: float = 1.0, big_r: float = 2.0) -> RingProblem:
    """Concentric annulus r < |z| < R; modulus log(R/r)/(2 pi)."""
    if not 0 < r < big_r:
        raise ValueError("need 0 < r < R")
    r2, big2 = r * r, big_r * big_r

    return RingProblem(
        plate0=lambda x, y: x * x + y * y <= r2,
        plate1=lambda x, y: x * x + y * y >= big2,
        data_box=Box(-big_r, big_r, -big_r, big_r),
        min_gap=big_r - r, bounded=True)


def square_ring_problem(inner: float = 1.0, outer: float = 2.0) -> RingProblem:
    """Square frame condenser between [-inner, inner]^2 and the complement
    of [-outer, outer]^2; no closed form, used against the network oracle."""
    if not 0 < inner < outer:
        raise ValueError("need 0 < inner < outer")

    return RingProblem(
        plate0=lambda x, y: np.maximum(np.abs(x), np.abs(y)) <= inner,
        plate1=lambda x, y: np.maximum(np.abs(x), np.abs(y)) >= outer,
        data_box=Box(-outer, outer, -outer, outer),
        min_gap=outer - inner, bounded=True)


def eccentric_ring_problem(rho: float) -> tuple[RingProblem, float]:
    """Off-center ring: the unit disk minus the disk of radius r/2 centered
    at -i r/2, with r = 2 rho / (1 + rho^2).

    A Mobius map sends it onto the concentric annulus 1 < |w| < rho, so the
    modulus is log(rho)/(2 pi); returns (problem, expected modulus).
    """
    if rho <= 1.0:
        raise ValueError("need rho > 1")
    r = 2.0 * rho / (1.0 + rho * rho)
    cy = -0.5 * r
    rad = 0.5 * r

    prob = RingProblem(
        plate0=lambda x, y: x * x + (y - cy) ** 2 <= rad * rad,
        plate1=lambda x, y: x * x + y * y >= 1.0,
        data_box=Box(-1.0, 1.0, -1.0, 1.0),
        min_gap=1.0 - r, bounded=True)
    return prob, math.log(rho) / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# quadrilateral anchors

def lshape_quad() -> Quadrilateral:
    """L-shaped hexagon with plates on the bottom edge and the inner
    vertical of the notch; the reentrant corner limits convergence order."""
    verts = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0],
                      [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]])
    return Quadrilateral(verts, (0, 1, 3, 5))


def random_convex_quad(rng: np.random.Generator) -> Quadrilateral:
    """Random fat convex quadrilateral inscribed in a mild annulus."""
    for _ in range(1000):
        ang = np.sort(rng.uniform(0.0, 2.0 * math.pi, 4))
        if np.min(np.diff(np.concatenate([ang, [ang[0] + 2.0 * math.pi]]))) < 0.6:
            continue
        rad = rng.uniform(0.75, 1.25, 4)
        v = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.all(cross > 0.05):
            return Quadrilateral(v, (0, 1, 2, 3))
    raise RuntimeError("failed to draw a convex quadrilateral")
