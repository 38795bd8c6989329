"""Projection solvers for SFP and SEP instances.

Both solvers are projected-gradient steps on a squared residual:

* SFP (CQ iteration): ``x <- P_C(x - t A^T (A x - P_Q(A x)))``
* SEP: ``x <- P_C(x - t A^T r)``, ``y <- P_Q(y + t B^T r)`` with ``r = A x - B y``

With ``0 < t < 2/L`` (``L`` the squared operator norm of the stacked map) the
residual objective is nonincreasing and iterates are Fejér monotone with
respect to the solution set. Infeasible instances are detected only
heuristically, by a residual that stops moving.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from scipy.optimize import minimize

from .errors import DimensionError
from .numerics import as_matrix, as_vector, operator_norm
from .sets import Ball, Box, HPolyhedron, Singleton

FLOOR_WINDOW = 100
FLOOR_CHANGE = 1e-14


@dataclass
class SolveResult:
    x: np.ndarray
    residual: float
    iterations: int
    converged: bool
    y: Optional[np.ndarray] = None
    distance: Optional[float] = None
    stalled: bool = False

    @property
    def point(self):
        return self.x if self.y is None else (self.x, self.y)

    def to_dict(self):
        out = {
            "x": self.x.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "stalled": self.stalled,
        }
        if self.y is not None:
            out["y"] = self.y.tolist()
        if self.distance is not None:
            out["distance"] = self.distance
        return out


def default_step(A, B=None):
    L = operator_norm(A) ** 2 + (0.0 if B is None else operator_norm(B) ** 2)
    return 1.0 / L if L > 0 else 1.0


def _step_bound(A, B=None):
    L = operator_norm(A) ** 2 + (0.0 if B is None else operator_norm(B) ** 2)
    return 2.0 / L if L > 0 else np.inf


def _check_step(step, bound):
    if not (0 < step < bound):
        raise ValueError(f"step {step:g} outside (0, {bound:g})")


class _FloorDetector:
    """Flags a residual that moved less than FLOOR_CHANGE over FLOOR_WINDOW steps."""

    def __init__(self):
        self.history = deque(maxlen=FLOOR_WINDOW + 1)

    def stuck(self, residual):
        self.history.append(residual)
        if len(self.history) <= FLOOR_WINDOW:
            return False
        return abs(self.history[0] - residual) < FLOOR_CHANGE


def solve_sfp(A, C, Q, x0, step=None, max_iters=100_000, tol=1e-8,
              callback: Optional[Callable[[int, np.ndarray], None]] = None):
    A = as_matrix(A, "A")
    x = as_vector(x0, "x0")
    if A.shape != (Q.dim, C.dim) or x.shape[0] != C.dim:
        raise DimensionError(
            f"A {A.shape}, C in R^{C.dim}, Q in R^{Q.dim} and x0 of length {x.shape[0]} do not fit")
    bound = _step_bound(A)
    if step is None:
        step = default_step(A)
    _check_step(step, bound)

    def residual(x):
        Ax = A @ x
        r = Ax - Q.project(Ax)
        return r, float(np.linalg.norm(r))

    r, res = residual(x)
    floor = _FloorDetector()
    k = 0
    if callback is not None:
        callback(0, x)
    while not (res <= tol and C.contains(x, tol)):
        if k >= max_iters:
            return SolveResult(x, res, k, False)
        x = C.project(x - step * (A.T @ r))
        k += 1
        r, res = residual(x)
        if callback is not None:
            callback(k, x)
        if res > tol and floor.stuck(res):
            return SolveResult(x, res, k, False, stalled=True)
    return SolveResult(x, res, k, True)


def solve_sep(A, B, C, Q, x0, y0, step=None, max_iters=100_000, tol=1e-8,
              callback: Optional[Callable[[int, np.ndarray, np.ndarray], None]] = None):
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    x = as_vector(x0, "x0")
    y = as_vector(y0, "y0")
    if (A.shape[1] != C.dim or B.shape[1] != Q.dim or A.shape[0] != B.shape[0]
            or x.shape[0] != C.dim or y.shape[0] != Q.dim):
        raise DimensionError(
            f"A {A.shape}, B {B.shape}, C in R^{C.dim}, Q in R^{Q.dim}, "
            f"x0 of length {x.shape[0]}, y0 of length {y.shape[0]} do not fit")
    bound = _step_bound(A, B)
    if step is None:
        step = default_step(A, B)
    _check_step(step, bound)

    r = A @ x - B @ y
    res = float(np.linalg.norm(r))
    floor = _FloorDetector()
    k = 0
    if callback is not None:
        callback(0, x, y)
    while not (res <= tol and C.contains(x, tol) and Q.contains(y, tol)):
        if k >= max_iters:
            return SolveResult(x, res, k, False, y=y)
        x, y = C.project(x - step * (A.T @ r)), Q.project(y + step * (B.T @ r))
        k += 1
        r = A @ x - B @ y
        res = float(np.linalg.norm(r))
        if callback is not None:
            callback(k, x, y)
        if res > tol and floor.stuck(res):
            return SolveResult(x, res, k, False, y=y, stalled=True)
    return SolveResult(x, res, k, True, y=y)


def _set_constraints(S, sl, n_vars):
    """SLSQP constraint dicts and bounds restricting ``w[sl]`` to `S`."""
    bounds = [(None, None)] * S.dim
    cons = []

    def embed(rows):
        J = np.zeros((rows.shape[0], n_vars))
        J[:, sl] = rows
        return J

    if isinstance(S, Box):
        bounds = [(None if np.isinf(lo) else lo, None if np.isinf(up) else up)
                  for lo, up in zip(S.lower, S.upper)]
    elif isinstance(S, HPolyhedron) and S.G.shape[0]:
        J = embed(-S.G)
        cons.append({"type": "ineq", "fun": lambda w: S.g - S.G @ w[sl], "jac": lambda w: J})
    elif isinstance(S, Singleton):
        J = embed(np.eye(S.dim))
        cons.append({"type": "eq", "fun": lambda w: w[sl] - S.point, "jac": lambda w: J})
    elif isinstance(S, Ball):
        def jac(w):
            J = np.zeros((1, n_vars))
            J[0, sl] = -2.0 * (w[sl] - S.center)
            return J
        cons.append({"type": "ineq",
                     "fun": lambda w: np.array([S.radius ** 2 - np.sum((w[sl] - S.center) ** 2)]),
                     "jac": jac})
    return bounds, cons


def _exact_nearest(A, B, C, Q, ax, ay, start):
    """Euclidean projection of the anchor onto the solution set via SLSQP.

    Variables are ``w = (x, y)``; for SFP (``ay is None``) ``y = A x`` is an
    auxiliary variable that does not enter the objective.
    """
    n, m = C.dim, Q.dim
    Bm = np.eye(m) if B is None else B
    sx, sy = slice(0, n), slice(n, n + m)
    weight = np.concatenate([np.ones(n), np.zeros(m) if ay is None else np.ones(m)])
    target = np.concatenate([ax, np.zeros(m) if ay is None else ay])
    E = np.hstack([A, -Bm])
    bx, cx = _set_constraints(C, sx, n + m)
    by, cy = _set_constraints(Q, sy, n + m)
    cons = cx + cy + [{"type": "eq", "fun": lambda w: E @ w, "jac": lambda w: E}]
    res = minimize(
        lambda w: 0.5 * float(np.sum(weight * (w - target) ** 2)),
        start,
        jac=lambda w: weight * (w - target),
        bounds=bx + by,
        constraints=cons,
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 500},
    )
    return res.x[sx], res.x[sy]


def nearest_solution(A, C, Q, anchor, B=None, tol=1e-10, max_iters=100_000, polish=True):
    """Estimate the nearest solution to `anchor` and its distance.

    First runs the projection solver from the anchor. Its limit is *a*
    solution near the anchor, so that distance is only an upper bound, and on
    badly conditioned data the iteration can be very slow. With
    ``polish=True`` the exact nearest point is then computed as a small
    constrained least-squares problem (SLSQP), and kept when it is feasible
    to within `tol` (scaled by the data) and no farther than the first
    estimate. For SEP (``B`` given) the anchor is the pair ``(x, y)``.
    """
    A = as_matrix(A, "A")
    if B is None:
        ax, ay = as_vector(anchor, "anchor"), None
        res = solve_sfp(A, C, Q, ax, max_iters=max_iters, tol=tol)
        start_y = A @ res.x
    else:
        B = as_matrix(B, "B")
        ax, ay = (as_vector(a, "anchor") for a in anchor)
        res = solve_sep(A, B, C, Q, ax, ay, max_iters=max_iters, tol=tol)
        start_y = res.y

    def dist(x, y):
        d2 = np.sum((x - ax) ** 2) + (0.0 if ay is None else np.sum((y - ay) ** 2))
        return float(np.sqrt(d2))

    res.distance = dist(res.x, res.y)
    if not polish or (res.converged and res.iterations == 0):
        return res
    x, y = _exact_nearest(A, B, C, Q, ax, ay, np.concatenate([res.x, start_y]))
    x = C.project(x)
    if B is None:
        residual = Q.distance(A @ x)
    else:
        y = Q.project(y)
        residual = float(np.linalg.norm(A @ x - B @ y))
    scale = 1.0 + np.linalg.norm(A) * np.linalg.norm(x)
    feasible = residual <= tol * scale
    d = dist(x, y)
    if feasible and (not res.converged or d <= res.distance + tol * scale):
        return SolveResult(x, residual, res.iterations, True,
                           y=None if B is None else y, distance=d)
    return res
