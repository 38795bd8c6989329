"""Stability certificates for split equality (SEP) and split feasibility (SFP) problems.

SEP: find ``x in C, y in Q`` with ``A x = B y``; its solution map sends
``(A, B)`` to the solution set. SFP: find ``x in C`` with ``A x in Q``; its
solution map sends ``A`` to the solution set.

At a reference solution the solution map is Lipschitz-like (has the Aubin
property) whenever the dual condition

    SEP:  (A^T)^{-1}(-N(xbar; C)) ∩ (B^T)^{-1}(N(ybar; Q)) = {0}
    SFP:  (A^T)^{-1}(-N(xbar; C)) ∩ N(A xbar; Q)          = {0}

holds. When the reference solution is nonzero the condition is also
necessary, so its failure certifies the map is *not* Lipschitz-like. At a
zero solution a failed condition licenses no conclusion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cones import TrivialityResult, build_preimage, intersection_trivial
from .errors import DimensionError, NotASolutionError, SplitStabError
from .numerics import DEFAULT_TOL, as_matrix, as_vector, kernel_is_trivial
from .sets import ConvexSet, negate

logger = logging.getLogger(__name__)

SEP = "SEP"
SFP = "SFP"

LIPSCHITZ_LIKE = "lipschitz_like"
NOT_LIPSCHITZ_LIKE = "not_lipschitz_like"
INCONCLUSIVE = "inconclusive"

INTERIOR_KERNEL_C = "interior_kernel_C"
INTERIOR_KERNEL_Q = "interior_kernel_Q"
INTERIOR_Q_IMAGE = "interior_Q_image"


class ShortcutMismatch(SplitStabError, AssertionError):
    """A sufficient shortcut fired but the LP battery found a nonzero witness."""


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """An SEP instance ``(A, B, C, Q, xbar, ybar)`` or an SFP instance ``(A, C, Q, xbar)``.

    `xbar` may be ``None`` for specs that are only meant to be solved.
    """

    kind: str
    A: np.ndarray
    C: ConvexSet
    Q: ConvexSet
    xbar: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None
    ybar: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in (SEP, SFP):
            raise ValueError(f"kind must be 'SEP' or 'SFP', got {self.kind!r}")
        A = as_matrix(self.A, "A")
        object.__setattr__(self, "A", A)
        n, m = self.C.dim, self.Q.dim
        if A.shape[1] != n:
            raise DimensionError(f"A has {A.shape[1]} columns but C lives in R^{n}")
        if self.kind == SEP:
            if self.B is None:
                raise DimensionError("SEP spec needs a matrix B")
            B = as_matrix(self.B, "B")
            object.__setattr__(self, "B", B)
            if B.shape != (A.shape[0], m):
                raise DimensionError(
                    f"B has shape {B.shape}, expected {(A.shape[0], m)} to match A {A.shape} and Q in R^{m}")
        else:
            if self.B is not None or self.ybar is not None:
                raise DimensionError("SFP spec takes neither B nor ybar")
            if A.shape[0] != m:
                raise DimensionError(f"A has {A.shape[0]} rows but Q lives in R^{m}")
        if self.xbar is not None:
            x = as_vector(self.xbar, "xbar")
            if x.shape[0] != n:
                raise DimensionError(f"xbar has dimension {x.shape[0]}, expected {n}")
            object.__setattr__(self, "xbar", x)
            if self.kind == SEP:
                if self.ybar is None:
                    raise DimensionError("SEP spec with xbar also needs ybar")
                y = as_vector(self.ybar, "ybar")
                if y.shape[0] != m:
                    raise DimensionError(f"ybar has dimension {y.shape[0]}, expected {m}")
                object.__setattr__(self, "ybar", y)
        for arr in (self.A, self.B, self.xbar, self.ybar):
            if arr is not None:
                arr.setflags(write=False)

    @classmethod
    def sep(cls, A, B, C, Q, xbar=None, ybar=None):
        return cls(SEP, A, C, Q, xbar, B, ybar)

    @classmethod
    def sfp(cls, A, C, Q, xbar=None):
        return cls(SFP, A, C, Q, xbar)

    @property
    def has_point(self):
        return self.xbar is not None

    def residual(self):
        """``|A xbar - B ybar|`` (SEP) or ``dist(A xbar, Q)`` (SFP)."""
        if self.kind == SEP:
            return float(np.linalg.norm(self.A @ self.xbar - self.B @ self.ybar))
        return self.Q.distance(self.A @ self.xbar)

    def check_solution(self, tol=DEFAULT_TOL):
        """Raise :class:`NotASolutionError` unless the reference point solves the problem."""
        if not self.has_point:
            raise NotASolutionError("spec has no reference point")
        if not self.C.contains(self.xbar, tol):
            raise NotASolutionError(
                f"not a solution: xbar is outside C ({self.C.kind}, distance {self.C.distance(self.xbar):.3e})")
        if self.kind == SEP:
            if not self.Q.contains(self.ybar, tol):
                raise NotASolutionError(
                    f"not a solution: ybar is outside Q ({self.Q.kind}, distance {self.Q.distance(self.ybar):.3e})")
            scale = (np.linalg.norm(self.A) * np.linalg.norm(self.xbar)
                     + np.linalg.norm(self.B) * np.linalg.norm(self.ybar))
            res = self.residual()
            if res > tol * (1.0 + scale):
                raise NotASolutionError(f"not a solution: ||A xbar - B ybar|| = {res:.3e}")
        else:
            res = self.residual()
            if res > tol:
                raise NotASolutionError(
                    f"not a solution: A xbar is outside Q ({self.Q.kind}, distance {res:.3e})")

    def point_norm(self):
        """Sup-norm of the reference solution (``(xbar, ybar)`` for SEP)."""
        parts = [self.xbar] if self.kind == SFP else [self.xbar, self.ybar]
        return float(max(np.max(np.abs(p), initial=0.0) for p in parts))


@dataclass
class Certificate:
    condition_holds: bool
    verdict: str
    witness: Optional[np.ndarray] = None
    shortcut: Optional[str] = None
    marginal: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "condition_holds": self.condition_holds,
            "verdict": self.verdict,
            "witness": None if self.witness is None else self.witness.tolist(),
            "shortcut": self.shortcut,
            "marginal": self.marginal,
            "details": self.details,
        }


def _cone_summary(K):
    return {"rays": K.rays.tolist(), "lineality": K.lineality.tolist(),
            "n_generators": K.n_generators}


def _preimages(spec, tol):
    """The two preimage cones of the condition plus the normal cones behind them."""
    NC = spec.C.normal_cone(spec.xbar, tol)
    P1 = build_preimage(spec.A, negate(NC))
    if spec.kind == SEP:
        NQ = spec.Q.normal_cone(spec.ybar, tol)
        P2 = build_preimage(spec.B, NQ)
    else:
        NQ = spec.Q.normal_cone(spec.A @ spec.xbar, tol)
        P2 = build_preimage(np.eye(spec.Q.dim), NQ)
    return P1, P2, NC, NQ


def check_sep_condition(spec, tol=DEFAULT_TOL) -> TrivialityResult:
    if spec.kind != SEP:
        raise ValueError("check_sep_condition needs an SEP spec")
    spec.check_solution(tol)
    P1, P2, _, _ = _preimages(spec, tol)
    return intersection_trivial(P1, P2, tol)


def check_sfp_condition(spec, tol=DEFAULT_TOL) -> TrivialityResult:
    if spec.kind != SFP:
        raise ValueError("check_sfp_condition needs an SFP spec")
    spec.check_solution(tol)
    P1, P2, _, _ = _preimages(spec, tol)
    return intersection_trivial(P1, P2, tol)


def shortcut(spec, tol=DEFAULT_TOL):
    """Cheap sufficient test: an interior point paired with an injective transpose.

    Returns a tag naming which sufficient condition fired, or ``None``.
    """
    if spec.C.is_interior(spec.xbar, tol) and kernel_is_trivial(spec.A.T, tol):
        return INTERIOR_KERNEL_C
    if spec.kind == SEP:
        if spec.Q.is_interior(spec.ybar, tol) and kernel_is_trivial(spec.B.T, tol):
            return INTERIOR_KERNEL_Q
    elif spec.Q.is_interior(spec.A @ spec.xbar, tol):
        return INTERIOR_Q_IMAGE
    return None


def certify(spec, tol=DEFAULT_TOL, debug=False):
    """Issue a three-way stability verdict for `spec` at its reference point.

    With ``debug=True`` the LP battery also runs when a shortcut fires, and a
    disagreement raises :class:`ShortcutMismatch`.
    """
    spec.check_solution(tol)
    tag = shortcut(spec, tol)
    P1, P2, NC, NQ = _preimages(spec, tol)
    details = {
        "kind": spec.kind,
        "tol": tol,
        "normal_cone_C": _cone_summary(NC),
        "normal_cone_Q": _cone_summary(NQ),
        "lp_calls": 0,
    }
    result = None
    if tag is None or debug:
        result = intersection_trivial(P1, P2, tol)
        details["lp_calls"] = result.lp_calls
        details["battery_optima"] = result.optima
        details["max_violation"] = result.max_violation
        if tag is not None and not result.trivial:
            raise ShortcutMismatch(
                f"shortcut {tag} fired but the LP battery found witness {result.witness}")

    holds = tag is not None or result.trivial
    marginal = bool(result is not None and result.marginal)
    if holds:
        return Certificate(True, LIPSCHITZ_LIKE, shortcut=tag, marginal=marginal, details=details)

    norm = spec.point_norm()
    details["solution_sup_norm"] = norm
    if tol / 10 < norm <= 10 * tol:
        marginal = True
    verdict = NOT_LIPSCHITZ_LIKE if norm > tol else INCONCLUSIVE
    return Certificate(False, verdict, witness=result.witness, marginal=marginal, details=details)


def sfp_as_sep(spec):
    """View an SFP instance as the SEP instance with ``B = I`` and ``ybar = A xbar``."""
    if spec.kind != SFP:
        raise ValueError("sfp_as_sep needs an SFP spec")
    m = spec.Q.dim
    ybar = None if spec.xbar is None else spec.A @ spec.xbar
    return ProblemSpec.sep(spec.A, np.eye(m), spec.C, spec.Q, spec.xbar, ybar)
