"""Structured closed convex sets and their normal cones.

Every set here has a finitely generated normal cone at each of its points,
which is what the certificate engine needs. Orthants and half-lines are
boxes with infinite bounds.

Tolerances: a constraint ``a @ x <= b`` (with ``|a| = 1``) is *active* at `x`
when its slack is at most ``tol * (1 + |b|)``. A point is *interior* when no
constraint is active, so an interior point always has the trivial normal cone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import DimensionError, EmptySetError, NotInSetError, ProjectionError
from .numerics import DEFAULT_TOL, INFEASIBLE, LinearProgram, as_matrix, as_vector, lp_solve

MAX_DYKSTRA_SWEEPS = 10_000
DYKSTRA_TOL = 1e-10


def _frozen(arr):
    arr.setflags(write=False)
    return arr


def _unit_rows(vectors, dim):
    rows = np.array(vectors, dtype=float).reshape(-1, dim)
    if rows.shape[0] == 0:
        return _frozen(np.zeros((0, dim)))
    norms = np.linalg.norm(rows, axis=1)
    keep = norms > 1e-15
    return _frozen(rows[keep] / norms[keep, None])


@dataclass(frozen=True, eq=False)
class FGCone:
    """Finitely generated cone ``{R^T lam + L^T mu : lam >= 0}``.

    `rays` and `lineality` are stored row-wise and unit-normalized; zero
    generators are dropped. With no generators the cone is ``{0}``.
    """

    dim: int
    rays: np.ndarray
    lineality: np.ndarray

    def __init__(self, dim, rays=(), lineality=()):
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "rays", _unit_rows(rays, self.dim))
        object.__setattr__(self, "lineality", _unit_rows(lineality, self.dim))

    @property
    def is_trivial(self):
        return self.rays.shape[0] == 0 and self.lineality.shape[0] == 0

    @property
    def n_generators(self):
        return self.rays.shape[0] + self.lineality.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FGCone):
            return NotImplemented
        return (self.dim == other.dim
                and np.array_equal(self.rays, other.rays)
                and np.array_equal(self.lineality, other.lineality))

    def __repr__(self):
        return (f"FGCone(dim={self.dim}, rays={self.rays.tolist()}, "
                f"lineality={self.lineality.tolist()})")


def negate(K):
    # generators are already unit; build directly so negation is exactly reversible
    out = object.__new__(FGCone)
    object.__setattr__(out, "dim", K.dim)
    object.__setattr__(out, "rays", _frozen(-K.rays))
    object.__setattr__(out, "lineality", K.lineality)
    return out


class ConvexSet:
    """Common interface of the set variants."""

    kind: ClassVar[str]
    dim: int

    def _check(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise DimensionError(
                f"point of dimension {x.shape[0]} given for a {self.kind} in R^{self.dim}")
        return x

    def distance(self, x):
        x = self._check(x)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, tol=DEFAULT_TOL):
        return self.distance(x) <= tol

    def is_interior(self, x, tol=DEFAULT_TOL):
        raise NotImplementedError

    def project(self, x):
        raise NotImplementedError

    def _normal_generators(self, x, tol):
        raise NotImplementedError

    def normal_cone(self, x, tol=DEFAULT_TOL):
        x = self._check(x)
        if not self.contains(x, tol):
            raise NotInSetError(
                f"point not in set: {self.kind} at distance {self.distance(x):.3e} > tol {tol:g}")
        rays, lineality = self._normal_generators(x, tol)
        return FGCone(self.dim, rays, lineality)


def _active(slack, bound, tol):
    return slack <= tol * (1.0 + np.abs(bound))


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lower: np.ndarray
    upper: np.ndarray
    kind: ClassVar[str] = "box"

    def __init__(self, lower, upper):
        lo = np.array(lower, dtype=float).reshape(-1)
        up = np.array(upper, dtype=float).reshape(-1)
        if lo.shape != up.shape:
            raise DimensionError(f"box bounds have shapes {lo.shape} and {up.shape}")
        if lo.shape[0] == 0:
            raise DimensionError("box must have dimension >= 1")
        if np.any(np.isnan(lo)) or np.any(np.isnan(up)):
            raise ValueError("NaN in box bounds")
        if np.any(lo == np.inf) or np.any(up == -np.inf):
            raise ValueError("box lower bounds cannot be +inf, upper bounds cannot be -inf")
        if np.any(lo > up):
            raise EmptySetError("box has lower > upper in some coordinate")
        object.__setattr__(self, "lower", _frozen(lo))
        object.__setattr__(self, "upper", _frozen(up))

    @property
    def dim(self):
        return self.lower.shape[0]

    def project(self, x):
        return np.clip(self._check(x), self.lower, self.upper)

    def is_interior(self, x, tol=DEFAULT_TOL):
        x = self._check(x)
        with np.errstate(invalid="ignore"):
            lo_free = ~np.isfinite(self.lower) | ~_active(x - self.lower, self.lower, tol)
            up_free = ~np.isfinite(self.upper) | ~_active(self.upper - x, self.upper, tol)
        return bool(np.all(lo_free & up_free) and np.all(self.lower < self.upper))

    def _normal_generators(self, x, tol):
        rays, lineality = [], []
        eye = np.eye(self.dim)
        for i in range(self.dim):
            lo, up = self.lower[i], self.upper[i]
            if lo == up:
                lineality.append(eye[i])
                continue
            if np.isfinite(lo) and _active(x[i] - lo, lo, tol):
                rays.append(-eye[i])
            if np.isfinite(up) and _active(up - x[i], up, tol):
                rays.append(eye[i])
        return rays, lineality


@dataclass(frozen=True, eq=False)
class HPolyhedron(ConvexSet):
    """``{x : G x <= g}``; rows of `G` are normalized on construction."""

    G: np.ndarray
    g: np.ndarray
    kind: ClassVar[str] = "polyhedron"

    def __init__(self, G, g, tol=DEFAULT_TOL):
        G = as_matrix(G, "G")
        g = as_vector(g, "g")
        if G.shape[0] != g.shape[0]:
            raise DimensionError(f"G has {G.shape[0]} rows but g has {g.shape[0]} entries")
        if G.shape[1] == 0:
            raise DimensionError("polyhedron must have dimension >= 1")
        norms = np.linalg.norm(G, axis=1)
        zero = norms == 0.0
        if np.any(g[zero] < -tol):
            raise EmptySetError("polyhedron has a row 0 <= g_i with g_i < 0")
        G = G[~zero] / norms[~zero, None]
        g = g[~zero] / norms[~zero]
        object.__setattr__(self, "G", _frozen(G))
        object.__setattr__(self, "g", _frozen(g))
        object.__setattr__(self, "_n", G.shape[1])
        if G.shape[0] and not self._feasible(tol):
            raise EmptySetError("polyhedron {x : G x <= g} is empty")

    @property
    def dim(self):
        return self._n

    def _feasible(self, tol):
        k, n = self.G.shape
        lp = LinearProgram(
            objective=np.zeros(n + k),
            eq_lhs=np.hstack([self.G, np.eye(k)]),
            eq_rhs=self.g,
            var_lower=np.concatenate([np.full(n, -np.inf), np.zeros(k)]),
            var_upper=np.full(n + k, np.inf),
        )
        return lp_solve(lp, tol).status != INFEASIBLE

    def slack(self, x):
        return self.g - self.G @ self._check(x)

    def distance(self, x):
        x = self._check(x)
        if self.G.shape[0] == 0:
            return 0.0
        viol = float(np.max(-self.slack(x)))
        if viol <= 0.0:
            return 0.0
        return float(np.linalg.norm(x - self.project(x)))

    def project(self, x):
        x = self._check(x).copy()
        G, g = self.G, self.g
        if G.shape[0] == 0:
            return x
        viol = G @ x - g
        if np.all(viol <= 0.0):
            return x
        worst = int(np.argmax(viol))
        candidate = x - viol[worst] * G[worst]
        if np.all(G @ candidate - g <= 1e-14 * (1.0 + np.abs(g))):
            return candidate
        y = self._dykstra(x)
        polished = self._polish(x, y)
        return y if polished is None else polished

    def _dykstra(self, x0):
        G, g = self.G, self.g
        k = G.shape[0]
        x = x0.copy()
        incr = np.zeros((k, x0.shape[0]))
        residual = np.inf
        for _ in range(MAX_DYKSTRA_SWEEPS):
            x_prev = x.copy()
            for i in range(k):
                y = x + incr[i]
                v = G[i] @ y - g[i]
                x = y - v * G[i] if v > 0.0 else y
                incr[i] = y - x
            residual = max(float(np.linalg.norm(x - x_prev)), float(np.max(G @ x - g)))
            if residual <= DYKSTRA_TOL:
                return x
        raise ProjectionError(
            f"Dykstra projection did not converge in {MAX_DYKSTRA_SWEEPS} sweeps "
            f"(residual {residual:.3e})", x, residual)

    def _polish(self, x0, y):
        """Exact projection from the active set guessed by Dykstra, if KKT holds."""
        G, g = self.G, self.g
        act = np.flatnonzero(G @ y - g >= -1e-8 * (1.0 + np.abs(g)))
        if act.size == 0:
            return None
        Ga, ga = G[act], g[act]
        lam, *_ = np.linalg.lstsq(Ga @ Ga.T, Ga @ x0 - ga, rcond=None)
        if np.any(lam < -1e-12):
            return None
        p = x0 - Ga.T @ lam
        if np.any(G @ p - g > 1e-12 * (1.0 + np.abs(g))):
            return None
        if np.linalg.norm(p - y) > 1e-6 * (1.0 + np.linalg.norm(y)):
            return None
        return p

    def is_interior(self, x, tol=DEFAULT_TOL):
        if self.G.shape[0] == 0:
            return True
        return bool(np.all(~_active(self.slack(x), self.g, tol)))

    def _normal_generators(self, x, tol):
        if self.G.shape[0] == 0:
            return [], []
        return self.G[_active(self.slack(x), self.g, tol)], []


@dataclass(frozen=True, eq=False)
class Singleton(ConvexSet):
    point: np.ndarray
    kind: ClassVar[str] = "singleton"

    def __init__(self, point):
        object.__setattr__(self, "point", _frozen(as_vector(point, "point")))

    @property
    def dim(self):
        return self.point.shape[0]

    def project(self, x):
        self._check(x)
        return self.point.copy()

    def is_interior(self, x, tol=DEFAULT_TOL):
        self._check(x)
        return False

    def _normal_generators(self, x, tol):
        return [], np.eye(self.dim)


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float
    kind: ClassVar[str] = "ball"

    def __init__(self, center, radius):
        radius = float(radius)
        if not (np.isfinite(radius) and radius > 0):
            raise ValueError("ball radius must be a positive finite number")
        object.__setattr__(self, "center", _frozen(as_vector(center, "center")))
        object.__setattr__(self, "radius", radius)

    @property
    def dim(self):
        return self.center.shape[0]

    def project(self, x):
        x = self._check(x)
        d = x - self.center
        nd = np.linalg.norm(d)
        if nd <= self.radius:
            return x.copy()
        return self.center + d * (self.radius / nd)

    def distance(self, x):
        d = float(np.linalg.norm(self._check(x) - self.center))
        return max(d - self.radius, 0.0)

    def is_interior(self, x, tol=DEFAULT_TOL):
        d = float(np.linalg.norm(self._check(x) - self.center))
        return not _active(self.radius - d, self.radius, tol)

    def _normal_generators(self, x, tol):
        d = x - self.center
        if _active(self.radius - np.linalg.norm(d), self.radius, tol):
            return [d], []
        return [], []


@dataclass(frozen=True, eq=False)
class WholeSpace(ConvexSet):
    n: int
    kind: ClassVar[str] = "whole_space"

    def __init__(self, n):
        n = int(n)
        if n < 1:
            raise DimensionError("whole space must have dimension >= 1")
        object.__setattr__(self, "n", n)

    @property
    def dim(self):
        return self.n

    def project(self, x):
        return self._check(x).copy()

    def distance(self, x):
        self._check(x)
        return 0.0

    def is_interior(self, x, tol=DEFAULT_TOL):
        self._check(x)
        return True

    def _normal_generators(self, x, tol):
        return [], []


def orthant(dim, sign):
    """Nonnegative (``sign=+1``) or nonpositive (``sign=-1``) orthant as a box."""
    if sign > 0:
        return Box(np.zeros(dim), np.full(dim, np.inf))
    return Box(np.full(dim, -np.inf), np.zeros(dim))


# functional aliases

def contains(S, x, tol=DEFAULT_TOL):
    return S.contains(x, tol)


def is_interior(S, x, tol=DEFAULT_TOL):
    return S.is_interior(x, tol)


def project(S, x):
    return S.project(x)


def normal_cone(S, x, tol=DEFAULT_TOL):
    return S.normal_cone(x, tol)
