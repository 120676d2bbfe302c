import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import polygon_distance, sampled_distance
from svdyn.domains import Trajectory
from svdyn.geometry import (TOL_GEO, GeometryError, VPolytope, dist_point_polytope, hausdorff,
                            inflate, path_metric_D, project)

coord = st.floats(-5, 5, allow_nan=False)


def polytopes(dim=2, max_pts=6):
    return st.lists(st.tuples(*[coord] * dim), min_size=1, max_size=max_pts).map(
        lambda pts: VPolytope(np.array(pts)))


def test_generator_is_in_set():
    P = VPolytope([[0, 0], [1, 0], [0.3, 2]])
    for g in P.generators:
        assert dist_point_polytope(g, P) == 0.0


def test_perpendicular_foot():
    assert dist_point_polytope([0.5, 1], VPolytope([[0, 0], [1, 0]])) == pytest.approx(1.0, abs=1e-12)


def test_radius_subtracted():
    P = VPolytope([[0, 0], [1, 0]], 0.5)
    assert dist_point_polytope([3, 0], P) == pytest.approx(1.5, abs=1e-12)


def test_random_hull_against_oracles():
    rng = np.random.default_rng(11)
    for _ in range(40):
        pts = rng.normal(size=(6, 2))
        p = rng.normal(size=2) * 2
        d = dist_point_polytope(p, VPolytope(pts))
        assert abs(d - polygon_distance(p, pts)) <= 2 * TOL_GEO
        assert d <= sampled_distance(p, pts, rng) + 2 * TOL_GEO


def test_higher_dimensional_projection_is_optimal():
    rng = np.random.default_rng(3)
    for _ in range(30):
        pts = rng.normal(size=(8, 4))
        p = rng.normal(size=4) * 3
        q = project(p, VPolytope(pts))
        # first-order optimality: no generator is strictly closer along its direction
        assert np.min((pts - q) @ (p - q)) <= 1e-7
        assert np.linalg.norm(p - q) <= sampled_distance(p, pts, rng, 20_000) + 1e-9


def test_dimension_mismatch_and_empty():
    with pytest.raises(GeometryError):
        dist_point_polytope([0, 0, 0], VPolytope([[0, 0]]))
    with pytest.raises(GeometryError):
        VPolytope(np.zeros((0, 2)))
    with pytest.raises(GeometryError):
        VPolytope([[0.0]], -1.0)


def test_hausdorff_examples():
    A = VPolytope([[0, 0], [1, 0]])
    assert tuple(hausdorff(A, A)) == (0.0, 0.0, 0.0)
    assert tuple(hausdorff(VPolytope([[0.0]]), VPolytope([[0.0], [1.0]]))) == (0.0, 1.0, 1.0)
    h = hausdorff(A, VPolytope([[0, 1], [1, 1]]))
    assert h == pytest.approx((1, 1, 1), abs=1e-12)
    with pytest.raises(GeometryError):
        hausdorff(VPolytope([[0.0]], 0.1), VPolytope([[0.0]]))


@settings(max_examples=60, deadline=None)
@given(polytopes(), polytopes(), polytopes())
def test_hausdorff_metric_axioms(A, B, C):
    ab, ac, cb = hausdorff(A, B).D, hausdorff(A, C).D, hausdorff(C, B).D
    assert ab == hausdorff(B, A).D
    assert hausdorff(A, A).D <= TOL_GEO
    assert ab <= ac + cb + 4 * TOL_GEO


def test_inflate_zero_and_negative():
    P = VPolytope([[0.0, 1.0]])
    assert inflate(P, 0) is P
    with pytest.raises(GeometryError):
        inflate(P, -0.1)


@settings(max_examples=60, deadline=None)
@given(polytopes(), st.tuples(coord, coord), st.floats(0, 3), st.floats(0, 3))
def test_inflate_identities(P, p, a, b):
    d = dist_point_polytope(p, P)
    assert dist_point_polytope(p, inflate(P, a)) == pytest.approx(max(0.0, d - a), abs=1e-12)
    assert dist_point_polytope(p, inflate(inflate(P, a), b)) == pytest.approx(
        dist_point_polytope(p, inflate(P, a + b)), abs=1e-12)


def const_path(value, K=4):
    t = np.linspace(-K, K, 9)
    return Trajectory(t, np.full((9, 1), value))


def test_path_metric_examples():
    assert path_metric_D(const_path(0.3), const_path(0.3), 3).value == 0.0
    d = path_metric_D(const_path(0.0), const_path(1.0), 3)
    assert d.value == 1.875 and d.truncation_bound == 0.125
    assert path_metric_D(const_path(0.0), const_path(0.5), 2).value == 0.875


def test_path_metric_window_checked():
    with pytest.raises(GeometryError):
        path_metric_D(const_path(0, K=2), const_path(0, K=2), 3)
    with pytest.raises(GeometryError):
        path_metric_D(const_path(0), const_path(0), 0.5)


def test_path_metric_sup_at_breakpoints():
    # tent peak 0.8 at t = 0.5 (inside [-1, 1]); x(0) = 0.8 * 2 / 2.5 = 0.64
    x = Trajectory([-2, 0.5, 2], [[0.0], [0.8], [0.0]])
    y = Trajectory([-2, 2], [[0.0], [0.0]])
    d = path_metric_D(x, y, 1)
    assert d.value == pytest.approx(0.64 + 0.5 * 0.8, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(1, 4))
def test_path_metric_bounded_and_monotone(a, b, K):
    lo, hi = sorted((a, b))
    d_lo = path_metric_D(const_path(0.0), const_path(lo), K).value
    d_hi = path_metric_D(const_path(0.0), const_path(hi), K).value
    assert d_lo <= d_hi < 2.0
    assert d_hi <= sum(2.0 ** -k for k in range(math.floor(K) + 1))
