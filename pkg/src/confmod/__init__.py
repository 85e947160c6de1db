"""Conformal modulus of long channel domains.

Grid-condenser solves for ring and quadrilateral moduli, closed-form special
function anchors, and a sweep harness that checks the asymptotic behaviour of
the modulus under horizontal stretching.
"""

from .errors import (ConfmodError, ConfigError, DomainValidationError,
                     SolverError, VerificationError)
from .geometry import (Box, BoundaryFunction, ChannelDomain, Quadrilateral,
                       has_straight_channel, is_updown_symmetric,
                       split_at_verticals, stretch,
                       translate, validate_domain)
from .analytic import (GammaValue, ShearParams, annulus_modulus,
                       asymptotic_prediction, gamma, grotzsch_mu,
                       halfplane_to_U, mobius_psi, r_of_rho, shear_dilatation,
                       shear_eta, teichmuller_modulus)
from .modsolver import (ModulusEstimate, SolverOptions, channel_quad_problems,
                        channel_ring_problem, conjugate_modulus, quad_condenser,
                        quad_modulus, resistor_network_modulus, richardson,
                        ring_condenser, ring_modulus, solve_condenser)
from .verify import (DilatationAudit, SweepRecord, Tolerances,
                     VerificationReport, check_theorem, dilatation_audit,
                     sweep, verify_domain, write_csv, write_report)
from .config import domain_fingerprint, dump_domain, load_domain

__version__ = "0.1.0"

__all__ = [
    "Box", "BoundaryFunction", "ChannelDomain", "Quadrilateral",
    "has_straight_channel", "is_updown_symmetric", "split_at_verticals",
    "stretch", "translate",
    "validate_domain",
    "GammaValue", "ShearParams", "annulus_modulus", "asymptotic_prediction",
    "gamma", "grotzsch_mu", "halfplane_to_U", "mobius_psi", "r_of_rho",
    "shear_dilatation", "shear_eta", "teichmuller_modulus",
    "ModulusEstimate", "SolverOptions", "channel_quad_problems",
    "channel_ring_problem", "conjugate_modulus", "quad_condenser",
    "quad_modulus", "resistor_network_modulus", "richardson",
    "ring_condenser", "ring_modulus", "solve_condenser",
    "DilatationAudit", "SweepRecord", "Tolerances", "VerificationReport",
    "check_theorem", "dilatation_audit", "sweep", "verify_domain",
    "write_csv", "write_report",
    "domain_fingerprint", "dump_domain", "load_domain",
    "ConfmodError", "ConfigError", "DomainValidationError", "SolverError",
    "VerificationError",
    "__version__",
]
