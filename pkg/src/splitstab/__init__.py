"""Stability certificates for split feasibility and split equality problems."""

__version__ = "0.1.0"

from .certify import (  # noqa: E402
    INCONCLUSIVE,
    LIPSCHITZ_LIKE,
    NOT_LIPSCHITZ_LIKE,
    Certificate,
    ProblemSpec,
    certify,
    check_sep_condition,
    check_sfp_condition,
    sfp_as_sep,
    shortcut,
)
from .sets import Ball, Box, FGCone, HPolyhedron, Singleton, WholeSpace, orthant  # noqa: E402

__all__ = [
    "Ball", "Box", "Certificate", "FGCone", "HPolyhedron", "INCONCLUSIVE", "LIPSCHITZ_LIKE",
    "NOT_LIPSCHITZ_LIKE", "ProblemSpec", "Singleton", "WholeSpace", "certify",
    "check_sep_condition", "check_sfp_condition", "orthant", "sfp_as_sep", "shortcut",
]
