import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import sample_members, set_at
from splitstab.errors import DimensionError, EmptySetError, NotInSetError, ProjectionError
from splitstab.sets import (
    Ball,
    Box,
    FGCone,
    HPolyhedron,
    Singleton,
    WholeSpace,
    contains,
    is_interior,
    negate,
    normal_cone,
    orthant,
    project,
)

TOL = 1e-9
KINDS = ("box", "polyhedron", "singleton", "ball", "whole_space")


def cone(rays=(), lineality=(), dim=1):
    return FGCone(dim, rays, lineality)


def test_contains_examples():
    assert contains(Box([-1], [1]), [0.5], TOL)
    assert not contains(Ball([0.0, 0.0], 1.0), [1.0 + 2 * TOL, 0.0], TOL)
    P = HPolyhedron([[1, 1], [-1, 0], [0, -1]], [1, 0, 0])
    assert contains(P, [0.5, 0.5], TOL)


def test_contains_dimension_mismatch():
    with pytest.raises(DimensionError):
        Box([-1], [1]).contains([0.0, 0.0])


def test_is_interior_examples():
    assert is_interior(Box([-1], [1]), [0.5], TOL)
    assert not is_interior(Singleton([0.0]), [0.0], TOL)
    assert is_interior(Box([0], [np.inf]), [1.0], TOL)
    assert not is_interior(Box([0], [np.inf]), [0.0], TOL)
    assert not is_interior(Box([1, 0], [1, 2]), [1.0, 1.0], TOL)


def test_project_examples():
    assert np.array_equal(project(Box([-1], [1]), [3.0]), [1.0])
    assert np.allclose(project(Ball([0, 0], 1), [3.0, 4.0]), [0.6, 0.8])
    assert np.allclose(project(HPolyhedron([[1, 0], [0, 1]], [0, 0]), [1.0, 1.0]), [0.0, 0.0])


def test_project_polyhedron_needs_dykstra():
    # the nearest point is the vertex: projecting onto either row alone
    # leaves the other violated
    P = HPolyhedron([[1, 2], [2, 1]], [0, 0])
    x = np.array([1.0, 1.0])
    p = P.project(x)
    assert np.all(P.G @ p <= P.g + 1e-12)
    assert np.allclose(p, [0.0, 0.0], atol=1e-12)


def test_dykstra_cap_raises_with_iterate(monkeypatch):
    import splitstab.sets as sets_mod
    monkeypatch.setattr(sets_mod, "MAX_DYKSTRA_SWEEPS", 1)
    P = HPolyhedron([[1, 2], [2, 1], [1, 1.2]], [0, 0, 0])
    with pytest.raises(ProjectionError) as err:
        P._dykstra(np.array([3.0, 1.0]))
    assert err.value.iterate.shape == (2,)
    assert err.value.residual > 0


def test_empty_polyhedron_rejected():
    with pytest.raises(EmptySetError):
        HPolyhedron([[1.0], [-1.0]], [0.0, -1.0])


def test_crossed_box_rejected():
    with pytest.raises(EmptySetError):
        Box([1.0], [0.0])


def test_nonpositive_radius_rejected():
    with pytest.raises(ValueError):
        Ball([0.0], 0.0)


def test_normal_cone_examples():
    assert normal_cone(Box([0], [np.inf]), [0.0]) == cone(rays=[[-1.0]])
    assert normal_cone(Box([-1], [1]), [0.5]).is_trivial
    N = normal_cone(Singleton(np.zeros(3)), np.zeros(3))
    assert N.rays.shape[0] == 0 and np.array_equal(N.lineality, np.eye(3))
    N = normal_cone(orthant(3, +1), np.zeros(3))
    assert N == FGCone(3, -np.eye(3))


def test_normal_cone_box_degenerate_coordinate_is_lineality():
    N = Box([0.0, -1.0], [0.0, 1.0]).normal_cone([0.0, 1.0])
    assert np.array_equal(N.lineality, [[1.0, 0.0]])
    assert np.array_equal(N.rays, [[0.0, 1.0]])


def test_normal_cone_ball_boundary_ray():
    N = Ball([1.0, 0.0], 2.0).normal_cone([1.0, 2.0])
    assert np.allclose(N.rays, [[0.0, 1.0]])
    assert Ball([1.0, 0.0], 2.0).normal_cone([1.0, 1.0]).is_trivial


def test_normal_cone_polyhedron_active_rows():
    P = HPolyhedron([[1, 1], [-1, 0], [0, -1]], [1, 0, 0])
    N = P.normal_cone([0.0, 1.0])
    expected = np.array([[1, 1], [-1, 0]]) / np.array([[np.sqrt(2)], [1.0]])
    assert np.allclose(N.rays, expected)


def test_normal_cone_rejects_outside_point():
    with pytest.raises(NotInSetError, match="point not in set"):
        Box([-1], [1]).normal_cone([2.0])


def test_whole_space_cone_trivial():
    assert WholeSpace(2).normal_cone([5.0, -3.0]).is_trivial


def test_negate_examples():
    assert negate(cone(rays=[[-1.0]])) == cone(rays=[[1.0]])
    assert negate(cone()) == cone()
    L = FGCone(2, lineality=np.eye(2))
    assert negate(L) == L


def test_fgcone_normalizes_and_drops_zero():
    K = FGCone(2, rays=[[3.0, 4.0], [0.0, 0.0]])
    assert np.allclose(K.rays, [[0.6, 0.8]])
    assert K.n_generators == 1


@given(st.integers(1, 3), st.integers(0, 10_000))
def test_negate_is_involution(dim, seed):
    rng = np.random.default_rng(seed)
    K = FGCone(dim, rng.standard_normal((2, dim)), rng.standard_normal((1, dim)))
    assert negate(negate(K)) == K


# -- per-variant properties on random (set, point) pairs ------------------------

def _random_pair(seed, kind):
    rng = np.random.default_rng(np.random.SeedSequence([21, seed]))
    x = rng.integers(-2, 3, size=int(rng.integers(1, 4))).astype(float)
    return rng, set_at(rng, x, (kind,)), x


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(20))
def test_projection_characterization(kind, seed):
    rng, S, x = _random_pair(seed, kind)
    z = x + 3.0 * rng.standard_normal(S.dim)
    p = S.project(z)
    assert S.contains(p, 1e-9)
    members = sample_members(rng, S, p, 100)
    assert np.max((members - p) @ (z - p)) <= 1e-9


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(20))
def test_projection_idempotent(kind, seed):
    rng, S, x = _random_pair(seed, kind)
    p = S.project(x + 3.0 * rng.standard_normal(S.dim))
    assert np.allclose(S.project(p), p, rtol=0, atol=1e-12)
    if S.contains(x, 0.0):
        assert np.array_equal(S.project(x), x)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(20))
def test_normal_cone_generators_are_normal(kind, seed):
    rng, S, x = _random_pair(seed, kind)
    N = S.normal_cone(x, TOL)
    members = sample_members(rng, S, x, 100)
    for v in np.vstack([N.rays, N.lineality, -N.lineality]):
        assert np.max((members - x) @ v) <= 1e-9


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(20))
def test_interior_implies_trivial_cone(kind, seed):
    rng, S, x = _random_pair(seed, kind)
    for p in (x, sample_members(rng, S, x, 1)[0]):
        if S.is_interior(p, TOL):
            assert S.normal_cone(p, TOL).is_trivial
