"""Seeded random instances shared by the property and acceptance suites.

Every generator builds sets *around* a chosen point so that some
constraints are active there, which is where normal cones are interesting.
Data is small-integer so LP optima are either zero or of order one.
"""

import numpy as np
from scipy.linalg import null_space

from splitstab import Ball, Box, HPolyhedron, ProblemSpec, Singleton, WholeSpace


def box_at(rng, x):
    lower, upper = [], []
    for xi in x:
        mode = rng.integers(5)
        if mode == 0:  # lower bound active
            lo, up = xi, (np.inf if rng.random() < 0.5 else xi + rng.integers(1, 3))
        elif mode == 1:  # upper bound active
            lo, up = (-np.inf if rng.random() < 0.5 else xi - rng.integers(1, 3)), xi
        elif mode == 2:
            lo = up = xi
        elif mode == 3:
            lo, up = xi - rng.integers(1, 3), xi + rng.integers(1, 3)
        else:
            lo, up = -np.inf, np.inf
        lower.append(lo)
        upper.append(up)
    return Box(lower, upper)


def polyhedron_at(rng, x, max_rows=4):
    n = x.shape[0]
    rows = []
    while len(rows) < rng.integers(1, max_rows + 1):
        r = rng.integers(-2, 3, size=n).astype(float)
        if np.any(r):
            rows.append(r)
    G = np.array(rows)
    slack = np.where(rng.random(len(rows)) < 0.6, 0.0, rng.integers(1, 3, size=len(rows)))
    return HPolyhedron(G, G @ x + slack)


def set_at(rng, x, kinds=("box", "polyhedron")):
    kind = kinds[rng.integers(len(kinds))]
    if kind == "box":
        return box_at(rng, x)
    if kind == "polyhedron":
        return polyhedron_at(rng, x)
    if kind == "singleton":
        return Singleton(x)
    if kind == "ball":
        # the point sits on the sphere half the time
        radius = float(rng.integers(1, 3))
        d = rng.standard_normal(x.shape[0])
        d /= np.linalg.norm(d)
        scale = radius if rng.random() < 0.5 else radius * rng.uniform(1.2, 3.0)
        return Ball(x - scale * d, radius if scale == radius else scale)
    return WholeSpace(x.shape[0])


def _point_in_kernel(rng, M):
    N = null_space(M)
    if N.shape[1] == 0:
        return np.zeros(M.shape[1])
    if rng.random() < 0.2:
        return np.zeros(M.shape[1])
    p = N @ rng.standard_normal(N.shape[1])
    return p / np.max(np.abs(p))


def random_sep(rng, max_dim=3, kinds=("box", "polyhedron")):
    """SEP instance with integer A, B and a solution drawn from ker [A, -B]."""
    l, n, m = rng.integers(1, max_dim + 1, size=3)
    A = rng.integers(-2, 3, size=(l, n)).astype(float)
    B = rng.integers(-2, 3, size=(l, m)).astype(float)
    w = _point_in_kernel(rng, np.hstack([A, -B]))
    x, y = w[:n], w[n:]
    return ProblemSpec.sep(A, B, set_at(rng, x, kinds), set_at(rng, y, kinds), x, y)


def random_sfp(rng, max_dim=3, kinds=("box", "polyhedron"), shape=None):
    """SFP instance with integer A and a feasible point with some active constraints."""
    m, n = shape if shape is not None else rng.integers(1, max_dim + 1, size=2)
    A = rng.integers(-2, 3, size=(m, n)).astype(float)
    x = rng.integers(-1, 2, size=n).astype(float)
    return ProblemSpec.sfp(A, set_at(rng, x, kinds), set_at(rng, A @ x, kinds), x)


def random_sep_zero_image(rng, max_dim=3):
    """SEP instance whose solution satisfies ``A x = B y = 0`` (so scaling A, B keeps it feasible)."""
    l, n, m = rng.integers(1, max_dim + 1, size=3)
    A = rng.integers(-2, 3, size=(l, n)).astype(float)
    B = rng.integers(-2, 3, size=(l, m)).astype(float)
    x = _point_in_kernel(rng, A)
    y = _point_in_kernel(rng, B)
    return ProblemSpec.sep(A, B, set_at(rng, x), set_at(rng, y), x, y)


def sample_members(rng, S, anchor, count):
    """Points of `S`; polyhedra are sampled by shooting rays from `anchor`."""
    n = S.dim
    if isinstance(S, Singleton):
        return np.tile(S.point, (count, 1))
    if isinstance(S, WholeSpace):
        return anchor + 5.0 * rng.standard_normal((count, n))
    if isinstance(S, Ball):
        d = rng.standard_normal((count, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = S.radius * rng.random((count, 1)) ** (1.0 / n)
        return S.center + r * d
    if isinstance(S, Box):
        lo = np.where(np.isfinite(S.lower), S.lower, np.minimum(S.upper, anchor) - 10.0)
        up = np.where(np.isfinite(S.upper), S.upper, np.maximum(S.lower, anchor) + 10.0)
        return lo + (up - lo) * rng.random((count, n))
    out = []
    while len(out) < count:
        d = rng.standard_normal(n)
        Gd = S.G @ d
        slack = S.g - S.G @ anchor
        with np.errstate(divide="ignore", invalid="ignore"):
            limits = np.where(Gd > 0, np.maximum(slack, 0.0) / Gd, np.inf)
        t_max = min(float(np.min(limits, initial=np.inf)), 10.0)
        p = anchor + rng.random() * t_max * d
        if S.contains(p, 1e-12):
            out.append(p)
    return np.array(out)


def set_around(rng, x, kind):
    """A set containing `x` with random slack (no constraint is forced active)."""
    n = x.shape[0]
    if kind == "box":
        return Box(x - rng.uniform(0.05, 1.0, n), x + rng.uniform(0.05, 1.0, n))
    if kind == "polyhedron":
        G = rng.standard_normal((int(rng.integers(1, 5)), n))
        return HPolyhedron(G, G @ x + rng.uniform(0.05, 1.0, G.shape[0]))
    if kind == "ball":
        d = rng.standard_normal(n)
        return Ball(x + rng.uniform(0.0, 0.9) * d / np.linalg.norm(d), 1.0)
    return WholeSpace(n)


MIN_SINGULAR_RATIO = 0.05


def _well_conditioned(M):
    """Smallest nonzero singular value is not tiny relative to the largest."""
    s = np.linalg.svd(M, compute_uv=False)
    s = s[s > 1e-9 * s[0]]
    return s[-1] >= MIN_SINGULAR_RATIO * s[0]


def feasible_solver_instance(rng, kind, max_dim=5, active=True):
    """Random feasible instance plus a known solution (the point it was built around).

    With ``active=True`` the sets are built with constraints active at the
    known solution; otherwise it has some slack in every constraint. Start
    points are drawn away from the solution so the solver has work to do.
    Draws are repeated until the linear map (``A`` or ``[A, -B]``) is
    reasonably conditioned, since the projection methods slow down in
    proportion to the squared singular-value ratio.
    """
    while True:
        out = _feasible_draw(rng, kind, max_dim, active)
        spec = out[0]
        M = spec.A if kind == "SFP" else np.hstack([spec.A, -spec.B])
        if _well_conditioned(M):
            return out


def _feasible_draw(rng, kind, max_dim, active):
    kinds = ("box", "polyhedron", "ball", "whole_space")
    make = (lambda x: set_at(rng, x, kinds)) if active else (
        lambda x: set_around(rng, x, kinds[rng.integers(len(kinds))]))
    n = int(rng.integers(1, max_dim + 1))
    l = int(rng.integers(1, max_dim + 1))
    x = rng.uniform(-1, 1, size=n)
    A = rng.uniform(-1, 1, size=(l, n))
    C = make(x)
    x0 = x + rng.uniform(-2, 2, size=n)
    if kind == "SFP":
        Q = make(A @ x)
        return ProblemSpec.sfp(A, C, Q, x), x0, None
    m = int(rng.integers(1, max_dim + 1))
    B = rng.uniform(-1, 1, size=(l, m))
    # pick y in Q's ambient space, then shift A's image so that A x = B y
    y = rng.uniform(-1, 1, size=m)
    A = A + np.outer(B @ y - A @ x, x) / max(x @ x, 1e-12) if np.any(x) else A
    if not np.allclose(A @ x, B @ y):
        y = np.linalg.lstsq(B, A @ x, rcond=None)[0]
    Q = make(y)
    y0 = y + rng.uniform(-2, 2, size=m)
    return ProblemSpec.sep(A, B, C, Q, x, y), x0, y0
