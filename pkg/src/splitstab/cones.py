"""Transpose-preimage cones and the triviality test for their intersection.

A :class:`PreimageCone` is ``{z : M^T z in K}`` for a finitely generated
cone ``K``. It is never enumerated; it is kept as the linear system

    M^T z - R lam - L mu = 0,   lam >= 0,

where the columns of ``R`` and ``L`` are the rays and lineality generators of
``K``. Whether two such cones meet only at the origin is decided by a battery
of ``2 l`` small LPs (``l = dim z``). :func:`sphere_oracle` answers the same
question by scanning unit directions, independently of the LP route.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize, nnls

from .errors import DimensionError, LpStalled, UnsupportedDimension
from .numerics import DEFAULT_TOL, OPTIMAL, LinearProgram, as_matrix, lp_solve
from .sets import FGCone

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PreimageCone:
    M: np.ndarray
    K: FGCone

    @property
    def z_dim(self):
        return self.M.shape[0]

    def constraint_blocks(self):
        """Return ``(M^T, -R, -L)`` so that membership reads ``M^T z - R lam - L mu = 0``."""
        return self.M.T, -self.K.rays.T, -self.K.lineality.T


@dataclass
class TrivialityResult:
    trivial: bool
    witness: Optional[np.ndarray] = None
    lp_calls: int = 0
    max_violation: float = 0.0
    marginal: bool = False
    optima: list = field(default_factory=list)

    def to_dict(self):
        return {
            "trivial": self.trivial,
            "witness": None if self.witness is None else self.witness.tolist(),
            "lp_calls": self.lp_calls,
            "max_violation": self.max_violation,
            "marginal": self.marginal,
            "optima": list(self.optima),
        }


def build_preimage(M, K):
    M = as_matrix(M, "M")
    if K.dim != M.shape[1]:
        raise DimensionError(
            f"cone lives in R^{K.dim} but M^T maps into R^{M.shape[1]} (M has shape {M.shape})")
    M.setflags(write=False)
    return PreimageCone(M, K)


def cone_membership(K, v, tol=DEFAULT_TOL):
    """Is `v` in `K` up to `tol`? Decided by one LP feasibility solve."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != K.dim:
        raise DimensionError(f"vector of dimension {v.shape[0]} tested against a cone in R^{K.dim}")
    if K.is_trivial:
        return bool(np.max(np.abs(v), initial=0.0) <= tol)
    R, L = K.rays.T, K.lineality.T
    nr, nl = R.shape[1], L.shape[1]
    lp = LinearProgram(
        objective=np.zeros(nr + nl),
        eq_lhs=np.hstack([R, L]),
        eq_rhs=v,
        var_lower=np.concatenate([np.zeros(nr), np.full(nl, -np.inf)]),
        var_upper=np.full(nr + nl, np.inf),
    )
    return lp_solve(lp, tol).status == OPTIMAL


def _battery_program(P1, P2):
    """Joint system of both memberships with ``-1 <= z <= 1``."""
    l = P1.z_dim
    blocks1 = P1.constraint_blocks()
    blocks2 = P2.constraint_blocks()
    p1, p2 = blocks1[0].shape[0], blocks2[0].shape[0]
    widths = [b.shape[1] for b in blocks1[1:]] + [b.shape[1] for b in blocks2[1:]]
    n_vars = l + sum(widths)
    E = np.zeros((p1 + p2, n_vars))
    E[:p1, :l] = blocks1[0]
    E[p1:, :l] = blocks2[0]
    col = l
    for rows, block in ((slice(0, p1), blocks1[1]), (slice(0, p1), blocks1[2]),
                        (slice(p1, p1 + p2), blocks2[1]), (slice(p1, p1 + p2), blocks2[2])):
        E[rows, col:col + block.shape[1]] = block
        col += block.shape[1]
    lower = np.full(n_vars, -np.inf)
    upper = np.full(n_vars, np.inf)
    lower[:l], upper[:l] = -1.0, 1.0
    # rays carry nonnegative multipliers, lineality generators free ones
    start = l
    for is_ray, width in zip((True, False, True, False), widths):
        if is_ray:
            lower[start:start + width] = 0.0
        start += width
    return E, lower, upper


def intersection_trivial(P1, P2, tol=DEFAULT_TOL):
    """Decide whether ``P1 ∩ P2 = {0}``.

    For every coordinate ``k`` and sign ``s`` maximize ``s z_k`` over the
    intersection clipped to the box ``[-1, 1]^l``. Any nonzero cone point
    rescales to touch a face of the box, so the intersection is trivial iff
    every optimum is ``<= tol``. Optima in ``(tol/10, 10 tol)`` mark the
    verdict as marginal.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if P1.z_dim != P2.z_dim:
        raise DimensionError(f"preimage variables differ in dimension: {P1.z_dim} vs {P2.z_dim}")
    l = P1.z_dim
    E, lower, upper = _battery_program(P1, P2)
    rhs = np.zeros(E.shape[0])
    optima = []
    witness_sol = None
    calls = 0
    for k in range(l):
        for s in (1.0, -1.0):
            c = np.zeros(E.shape[1])
            c[k] = s
            out = lp_solve(LinearProgram(c, E, rhs, lower, upper), tol)
            calls += 1
            if out.status != OPTIMAL:
                # z = 0 is always feasible and z is boxed, so anything else is numerical trouble
                raise LpStalled(f"battery LP for coordinate {k} returned {out.status}")
            optima.append(out.objective_value)
            if out.objective_value > tol and witness_sol is None:
                witness_sol = out.solution
    trivial = witness_sol is None
    marginal = any(tol / 10 < v < 10 * tol for v in optima)
    result = TrivialityResult(trivial=trivial, lp_calls=calls, marginal=marginal, optima=optima)
    if not trivial:
        scale = np.max(np.abs(witness_sol[:l]))
        sol = witness_sol / scale
        result.witness = sol[:l]
        result.max_violation = float(np.max(np.abs(E @ sol), initial=0.0))
    return result


# -- brute-force oracle -----------------------------------------------------

def _sphere_grid(dim, resolution):
    """Unit directions and the covering radius of the grid (chordal)."""
    if dim == 1:
        return np.array([[1.0], [-1.0]]), 0.0
    if dim == 2:
        t = 2 * np.pi * np.arange(resolution) / resolution
        return np.column_stack([np.cos(t), np.sin(t)]), 2 * np.sin(np.pi / (2 * resolution))
    theta = np.pi * (np.arange(resolution) + 0.5) / resolution
    phi = 2 * np.pi * np.arange(resolution) / resolution
    T, F = np.meshgrid(theta, phi, indexing="ij")
    pts = np.column_stack([(np.sin(T) * np.cos(F)).ravel(),
                           (np.sin(T) * np.sin(F)).ravel(),
                           np.cos(T).ravel()])
    pts = np.vstack([pts, [[0, 0, 1.0], [0, 0, -1.0]]])
    return pts, 1.12 * np.pi / resolution


def _cone_distances(K, V):
    """Euclidean distance from each row of `V` to the cone `K`."""
    if K.is_trivial:
        return np.linalg.norm(V, axis=1)
    if K.rays.shape[0] == 0:
        L = K.lineality.T
        coef, *_ = np.linalg.lstsq(L, V.T, rcond=None)
        return np.linalg.norm(V.T - L @ coef, axis=0)
    G = np.hstack([K.rays.T, K.lineality.T, -K.lineality.T])
    return np.array([nnls(G, v)[1] for v in V])


def _to_unit(angles, dim):
    if dim == 2:
        return np.array([np.cos(angles[0]), np.sin(angles[0])])
    t, f = angles
    return np.array([np.sin(t) * np.cos(f), np.sin(t) * np.sin(f), np.cos(t)])


def _to_angles(z):
    if z.shape[0] == 2:
        return np.array([np.arctan2(z[1], z[0])])
    return np.array([np.arccos(np.clip(z[2], -1, 1)), np.arctan2(z[1], z[0])])


def sphere_oracle(P1, P2, resolution=256, tol=1e-6, max_refine=8):
    """Brute-force search for a unit ``z`` in both preimage cones.

    Scans a grid of unit directions; grid points whose combined distance to
    the two cones is below the grid's Lipschitz slack are polished with a
    local Nelder-Mead search on the sphere. A returned direction passes both
    :func:`cone_membership` tests at `tol`; ``None`` means no such direction
    was found.
    """
    if P1.z_dim != P2.z_dim:
        raise DimensionError(f"preimage variables differ in dimension: {P1.z_dim} vs {P2.z_dim}")
    dim = P1.z_dim
    if dim > 3:
        raise UnsupportedDimension(f"sphere oracle supports dimension <= 3, got {dim}")
    if resolution < 16:
        raise ValueError("resolution must be at least 16")

    def dist(Z):
        return (_cone_distances(P1.K, Z @ P1.M)
                + _cone_distances(P2.K, Z @ P2.M))

    def accept(z):
        return (cone_membership(P1.K, P1.M.T @ z, tol)
                and cone_membership(P2.K, P2.M.T @ z, tol))

    grid, h = _sphere_grid(dim, resolution)
    d = dist(grid)
    order = np.argsort(d, kind="stable")
    for idx in order:
        if d[idx] > tol / 10:
            break
        if accept(grid[idx]):
            return grid[idx].copy()
    if dim == 1:
        return None

    lip = np.linalg.norm(P1.M, 2) + np.linalg.norm(P2.M, 2)
    slack = lip * h + tol
    starts = []
    for idx in order:
        if d[idx] > slack or len(starts) >= max_refine:
            break
        if all(np.linalg.norm(grid[idx] - grid[j]) > 2 * h for j in starts):
            starts.append(idx)

    def objective(angles):
        z = _to_unit(angles, dim)
        return float(dist(z[None, :])[0] ** 2)

    for idx in starts:
        res = minimize(objective, _to_angles(grid[idx]), method="Nelder-Mead",
                       options={"xatol": 1e-13, "fatol": 1e-30, "maxiter": 4000})
        z = _to_unit(res.x, dim)
        if np.sqrt(res.fun) <= tol / 10 and accept(z):
            return z
    return None
