"""Dense linear algebra helpers and a small simplex LP solver.

Matrices and vectors are plain ``numpy`` float arrays. The helpers here only
add the shape/finiteness checks the rest of the package relies on.

The LP solver is a textbook two-phase tableau simplex with Bland's rule. The
problems solved by this package have at most a few dozen columns, so the
solver favours determinism and anti-cycling over speed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, LpStalled

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
PIVOT_TOL = 1e-12

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


def as_matrix(M, name="matrix"):
    """Return `M` as a finite 2-D float array (copy)."""
    arr = np.array(M, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_vector(v, name="vector"):
    """Return `v` as a finite 1-D float array (copy)."""
    arr = np.array(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def matvec(M, v):
    M = np.asarray(M, dtype=float)
    v = np.asarray(v, dtype=float)
    if M.ndim != 2 or v.ndim != 1 or M.shape[1] != v.shape[0]:
        raise DimensionError(
            f"cannot multiply matrix of shape {M.shape} with vector of shape {v.shape}")
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(v))):
        raise ValueError("matvec operands have non-finite entries")
    return M @ v


def transpose(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError(f"transpose expects a 2-D array, got shape {M.shape}")
    return M.T.copy()


def kernel_is_trivial(M, tol=DEFAULT_TOL):
    """True iff ``M x = 0`` only for ``x = 0``.

    The numerical rank counts singular values above ``tol * max|M_ij|``, so the
    answer does not change when `M` is multiplied by a positive scalar.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.asarray(M, dtype=float)
    rows, cols = M.shape
    if cols == 0:
        return True
    scale = np.max(np.abs(M)) if M.size else 0.0
    if scale == 0.0:
        return False
    s = np.linalg.svd(M / scale, compute_uv=False)
    rank = int(np.sum(s > tol))
    return rank == cols


def operator_norm(M, iters=50, seed=0):
    """Spectral norm of `M` by power iteration on ``M^T M``."""
    M = np.asarray(M, dtype=float)
    if M.size == 0 or not np.any(M):
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(M.shape[1])
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(iters):
        y = M.T @ (M @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            # start vector in the kernel; restart along the largest column
            x = np.zeros(M.shape[1])
            x[int(np.argmax(np.linalg.norm(M, axis=0)))] = 1.0
            continue
        x = y / ny
        sigma = np.linalg.norm(M @ x)
    return float(sigma)


@dataclass(frozen=True)
class LinearProgram:
    """maximize ``objective @ x`` s.t. ``eq_lhs @ x = eq_rhs``, ``var_lower <= x <= var_upper``.

    Infinite bounds are given as ``-np.inf`` / ``np.inf``.
    """

    objective: np.ndarray
    eq_lhs: np.ndarray
    eq_rhs: np.ndarray
    var_lower: np.ndarray
    var_upper: np.ndarray

    def __post_init__(self):
        c = as_vector(self.objective, "objective")
        n = c.shape[0]
        A = np.array(self.eq_lhs, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        A = as_matrix(A, "eq_lhs")
        b = np.array(self.eq_rhs, dtype=float).reshape(-1)
        if not np.all(np.isfinite(b)):
            raise ValueError("eq_rhs has non-finite entries")
        lo = np.array(self.var_lower, dtype=float).reshape(-1)
        up = np.array(self.var_upper, dtype=float).reshape(-1)
        if A.shape != (b.shape[0], n):
            raise DimensionError(
                f"eq_lhs shape {A.shape} inconsistent with {b.shape[0]} rows and {n} variables")
        if lo.shape != (n,) or up.shape != (n,):
            raise DimensionError("bounds must have one entry per variable")
        if np.any(np.isnan(lo)) or np.any(np.isnan(up)):
            raise ValueError("NaN in variable bounds")
        if np.any(lo == np.inf) or np.any(up == -np.inf):
            raise ValueError("lower bounds cannot be +inf and upper bounds cannot be -inf")
        if np.any(lo > up):
            raise ValueError("var_lower must not exceed var_upper")
        for name, val in (("objective", c), ("eq_lhs", A), ("eq_rhs", b),
                          ("var_lower", lo), ("var_upper", up)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_vars(self):
        return self.objective.shape[0]


@dataclass(frozen=True)
class LpOutcome:
    status: str
    solution: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    iterations: int = 0
    residual: float = field(default=0.0, compare=False)


def _to_standard_form(lp):
    """Rewrite bounded variables as ``x = offset + D @ w`` with ``w >= 0``.

    Returns ``(A_std, b_std, c_std, D, offset, c0)``.
    """
    n = lp.n_vars
    cols = []          # (original index, sign) per standard column
    offset = np.zeros(n)
    upper_rows = []    # (standard column, width)
    for j in range(n):
        lo, up = lp.var_lower[j], lp.var_upper[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(up):
                upper_rows.append((len(cols) - 1, up - lo))
        elif np.isfinite(up):
            offset[j] = up
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    n_main = len(cols)
    n_std = n_main + len(upper_rows)
    D = np.zeros((n, n_std))
    for k, (j, s) in enumerate(cols):
        D[j, k] = s
    k_eq = lp.eq_lhs.shape[0]
    A_std = np.zeros((k_eq + len(upper_rows), n_std))
    b_std = np.zeros(k_eq + len(upper_rows))
    A_std[:k_eq, :n_main] = lp.eq_lhs @ D[:, :n_main]
    b_std[:k_eq] = lp.eq_rhs - lp.eq_lhs @ offset
    for r, (k, width) in enumerate(upper_rows):
        A_std[k_eq + r, k] = 1.0
        A_std[k_eq + r, n_main + r] = 1.0
        b_std[k_eq + r] = width
    c_std = D.T @ lp.objective
    c0 = float(lp.objective @ offset)
    return A_std, b_std, c_std, D, offset, c0


class _Tableau:
    """Dense simplex tableau ``[A | b]`` with an explicit basis list."""

    def __init__(self, A, b, basis):
        self.T = np.hstack([A, b[:, None]])
        self.basis = list(basis)

    @property
    def rhs(self):
        return self.T[:, -1]

    def pivot(self, i, j):
        T = self.T
        T[i] /= T[i, j]
        for k in range(T.shape[0]):
            if k != i and T[k, j] != 0.0:
                T[k] -= T[k, j] * T[i]
        T[:, j] = 0.0
        T[i, j] = 1.0
        self.basis[i] = j

    def run(self, cost, n_allowed, tol, max_iter, counter):
        """Bland's-rule primal simplex maximizing ``cost @ w``."""
        T = self.T
        cost_tol = tol * max(1.0, float(np.max(np.abs(cost))) if cost.size else 1.0)
        while True:
            if counter[0] >= max_iter:
                raise LpStalled(
                    f"simplex exceeded {max_iter} pivots without terminating")
            cb = cost[self.basis] if self.basis else np.zeros(0)
            reduced = cost[:n_allowed] - cb @ T[:, :n_allowed]
            entering = np.flatnonzero(reduced > cost_tol)
            if entering.size == 0:
                return OPTIMAL
            j = int(entering[0])
            col = T[:, j]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return UNBOUNDED
            ratios = np.maximum(T[rows, -1], 0.0) / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + PIVOT_TOL * max(1.0, best)]
            i = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(i, j)
            counter[0] += 1


def _solve_standard(A, b, c, tol, max_iter):
    """maximize ``c @ w`` s.t. ``A w = b, w >= 0``. Returns (status, w, pivots)."""
    m, n = A.shape
    A = A.copy()
    b = b.copy()
    row_scale = np.max(np.abs(A), axis=1) if n else np.zeros(m)
    keep = []
    for i in range(m):
        if row_scale[i] == 0.0:
            if abs(b[i]) > tol * (1.0 + abs(b[i])):
                return INFEASIBLE, None, 0
            continue
        A[i] /= row_scale[i]
        b[i] /= row_scale[i]
        keep.append(i)
    A = A[keep]
    b = b[keep]
    m = A.shape[0]
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    counter = [0]
    tab = _Tableau(np.hstack([A, np.eye(m)]), b, range(n, n + m))
    phase1 = np.concatenate([np.zeros(n), -np.ones(m)])
    tab.run(phase1, n + m, tol, max_iter, counter)
    infeas = sum(tab.rhs[i] for i, bv in enumerate(tab.basis) if bv >= n)
    if infeas > tol * (1.0 + (float(np.max(b)) if m else 0.0)):
        return INFEASIBLE, None, counter[0]

    # drive artificials out of the basis; rows where that is impossible are redundant
    redundant = []
    for i in range(m):
        if tab.basis[i] >= n:
            row = tab.T[i, :n]
            j = int(np.argmax(np.abs(row))) if n else -1
            if n and abs(row[j]) > 1e3 * PIVOT_TOL:
                tab.pivot(i, j)
            else:
                redundant.append(i)
    keep = [i for i in range(m) if i not in redundant]
    tab.T = np.hstack([tab.T[keep, :n], tab.T[keep, -1:]])
    tab.basis = [tab.basis[i] for i in keep]
    tab.T[:, -1] = np.maximum(tab.T[:, -1], 0.0)

    status = tab.run(c, n, tol, max_iter, counter)
    if status == UNBOUNDED:
        return UNBOUNDED, None, counter[0]
    w = np.zeros(n)
    for i, bv in enumerate(tab.basis):
        w[bv] = tab.T[i, -1]
    return OPTIMAL, w, counter[0]


def lp_solve(lp, tol=DEFAULT_TOL, max_iter=None):
    """Solve a :class:`LinearProgram` with the two-phase simplex method.

    Raises :class:`LpStalled` when the pivot cap is hit; never guesses a status.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, b, c, D, offset, c0 = _to_standard_form(lp)
    if max_iter is None:
        max_iter = 200 * (A.shape[0] + A.shape[1]) + 1000
    status, w, pivots = _solve_standard(A, b, c, tol, max_iter)
    if status != OPTIMAL:
        logger.debug("lp %s after %d pivots", status, pivots)
        return LpOutcome(status, iterations=pivots)
    x = offset + D @ w
    x = np.clip(x, lp.var_lower, lp.var_upper)
    resid = float(np.max(np.abs(lp.eq_lhs @ x - lp.eq_rhs))) if lp.eq_lhs.shape[0] else 0.0
    return LpOutcome(OPTIMAL, x, float(lp.objective @ x), pivots, resid)
