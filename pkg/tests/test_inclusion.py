import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circle_defect_oracle, circle_flow
from svdyn.domains import Box, Grid, Trajectory
from svdyn.fields import AffineBallField, SetValuedField
from svdyn.geometry import TOL_GEO, GeometryError, VPolytope
from svdyn.inclusion import (Chase, MinNorm, RandomVertex, euler_trajectory, reachable_tube,
                             semigroup_check, wapt_defect_bounds)
from svdyn.relations import discretize_field
from svdyn.scenarios import scenario_circle

BOX1 = Box((-1,), (1,))
ZERO = SetValuedField(1, lambda x: VPolytope([[0.0]]), growth_c=1.0, lipschitz_hint=0.0)
NEG = AffineBallField([[-1.0]])
CONE = SetValuedField(1, lambda x: VPolytope([[-1.0], [1.0]]), growth_c=1.0, lipschitz_hint=0.0)


@pytest.mark.parametrize("sel", [MinNorm(), RandomVertex(3)])
def test_zero_field_constant(sel):
    X = euler_trajectory(ZERO, [0.3], 0.1, 1.0, sel, domain=BOX1)
    assert np.all(X.points == 0.3)


def test_linear_field_geometric():
    X = euler_trajectory(NEG, [1.0], 0.1, 1.0, domain=BOX1)
    assert np.allclose(X.points[:, 0], 0.9 ** np.arange(11), rtol=0, atol=1e-15)
    assert X.points[10, 0] == pytest.approx(0.34867844, abs=1e-8)


def test_euler_residual_identity():
    F, C = scenario_circle()
    for X in (euler_trajectory(NEG, [0.8], 0.05, 2.0, RandomVertex(1), domain=BOX1),
              euler_trajectory(F, [0.2], 0.05, 2.0, domain=C)):
        h = 0.05
        v = X.info["velocities"]
        assert np.allclose(X.steps / h, v, rtol=0, atol=1e-14)
        assert X.info["clip_events"] == 0


def test_clip_events_counted():
    F = SetValuedField(1, lambda x: VPolytope([[1.0]]), growth_c=1.0)
    with pytest.warns(RuntimeWarning):
        X = euler_trajectory(F, [0.9], 0.1, 0.5, domain=BOX1)
    assert X.info["clip_events"] > 0 and X.points.max() == 1.0


def test_circle_euler_converges_to_closed_form():
    F, C = scenario_circle()
    errs = []
    for h in (0.02, 0.01, 0.005):
        X = euler_trajectory(F, [0.5], h, 2.0, domain=C)
        errs.append(np.max(np.abs(X.points[:, 0] - circle_flow(0.5, X.times))))
    # estimated constant from the halving ratio bounds every error
    C_est = errs[0] / 0.02
    assert errs[1] <= C_est * 0.01 * 1.05 and errs[2] <= C_est * 0.005 * 1.05
    assert 1.6 < errs[0] / errs[1] < 2.4
    assert np.all(np.diff(euler_trajectory(F, [0.5], 0.01, 2.0, domain=C).points[:, 0]) > 0)


def test_chase_follows_target():
    target = euler_trajectory(NEG, [0.7], 0.1, 1.0, domain=BOX1)
    Z = euler_trajectory(NEG, [0.7], 0.1, 1.0, Chase(target), domain=BOX1)
    assert np.allclose(Z.points, target.points, atol=1e-12)


def test_tube_zero_field_constant():
    g = Grid(BOX1, 20)
    tube = reachable_tube(ZERO, [7], 0.1, 1.0, g)
    assert all(list(s) == [7] for s in tube.slices)
    assert list(tube.slices[0]) == [7] and all(tube.certified)


def test_tube_full_speed_cone():
    g = Grid(BOX1, 40)
    w = 0.05
    h = 0.05
    start = g.cell_of([[0.0]])
    tube = reachable_tube(CONE, start, h, 0.5, g)
    for k, s in enumerate(tube.slices):
        t = k * h
        lo, hi = g.cell_bounds(int(s.min()))[0][0], g.cell_bounds(int(s.max()))[1][0]
        assert lo <= max(-1.0, -t) + 1e-12 and hi >= min(1.0, t) - 1e-12
        # padding: the cone of radius t plus one cell of inflation per step
        assert lo >= -t - (k + 1) * 2 * w - 1e-12 and hi <= t + (k + 1) * 2 * w + 1e-12


def test_tube_linear_contraction_interval_oracle():
    g = Grid(BOX1, 40)
    h, w = 0.1, 0.05
    top = g.cell_of([[1.0]])
    tube = reachable_tube(NEG, top, h, 2.0, g)
    n_bound = 1.0
    for k, s in enumerate(tube.slices):
        a, b = (1 - h) ** k * (1 - w), (1 - h) ** k * 1.0
        must = g.cells_in_box([a], [b])[0]
        assert set(must) <= set(s)
        assert len(s) <= math.floor(n_bound + 1e-9)
        n_bound = (1 - h) * (n_bound - 1) + (1 + h) + 2


def _tube_error(h, cells, T=1.0):
    g = Grid(BOX1, cells)
    start = g.cells_in_box([0.5 + 1e-12], [1.0 - 1e-12])[0]
    s = reachable_tube(NEG, start, h, T, g).slices[-1]
    lo, hi = g.cell_bounds(int(s.min()))[0][0], g.cell_bounds(int(s.max()))[1][0]
    elo, ehi = 0.5 * math.exp(-T), math.exp(-T)
    return max(abs(lo - elo), abs(hi - ehi))


def test_tube_halving_property():
    e1 = _tube_error(0.1, 40)
    e2 = _tube_error(0.05, 80)
    e3 = _tube_error(0.025, 160)
    assert e2 <= 1.25 * e1 and e3 <= 1.25 * e2


@settings(max_examples=25, deadline=None)
@given(st.sets(st.integers(0, 39), min_size=1, max_size=6), st.sets(st.integers(0, 39), max_size=6))
def test_tube_monotone_in_start(A, extra):
    g = Grid(BOX1, 40)
    ta = reachable_tube(NEG, sorted(A), 0.1, 0.5, g)
    tb = reachable_tube(NEG, sorted(A | extra), 0.1, 0.5, g)
    assert all(set(a) <= set(b) for a, b in zip(ta.slices, tb.slices))


def test_tube_warns_on_large_step():
    F = AffineBallField([[-10.0]])
    with pytest.warns(RuntimeWarning):
        reachable_tube(F, [5], 0.1, 0.2, Grid(BOX1, 10))
    with pytest.raises(GeometryError):
        reachable_tube(NEG, [], 0.1, 0.2, Grid(BOX1, 10))


def test_tube_slices_match_relation_powers():
    F, C = scenario_circle()
    g = Grid(C, 60)
    R = discretize_field(F, g, 0.05)
    tube = reachable_tube(F, [10], 0.05, 0.5, g)
    cur = np.array([10])
    for s in tube.slices:
        assert np.array_equal(cur, s)
        cur = R.image(cur)


@pytest.mark.parametrize("F,j,k", [(NEG, 0, 4), (ZERO, 3, 5), (CONE, 2, 3)])
def test_semigroup_box(F, j, k):
    assert semigroup_check(F, Grid(BOX1, 30), 0.1, j, k, [12]) == 0.0


def test_semigroup_circle():
    F, C = scenario_circle()
    assert semigroup_check(F, Grid(C, 100), 0.01, 10, 10, [40, 41]) == 0.0


def test_defect_self_chase():
    F, C = scenario_circle()
    g = Grid(C, 100)
    X = euler_trajectory(F, [0.3], 0.01, 3.0, domain=C)
    b = wapt_defect_bounds(X, 1.0, 1.0, F, g, 0.01)
    assert b.upper <= TOL_GEO and b.lower == 0.0 and b.certified


def test_defect_constant_path_brackets_exact():
    # the tube widens by about one cell radius per step, so cells must be small against h
    g = Grid(BOX1, 400)
    X = Trajectory([0.0, 1.0], [[1.0], [1.0]], BOX1)
    b = wapt_defect_bounds(X, 0.0, 1.0, NEG, g, 0.05)
    exact = 1 - math.exp(-1)
    assert b.lower <= exact <= b.upper + b.model_err
    assert b.lower > 0.5


def test_defect_shifted_circle_solution_against_brute_force():
    F, C = scenario_circle()
    g = Grid(C, 200)
    ts = np.linspace(0.0, 1.0, 401)
    X = Trajectory(ts, C.wrap(circle_flow(0.5, ts) + 0.2).reshape(-1, 1), C,
                   steps=np.diff(circle_flow(0.5, ts)).reshape(-1, 1))
    b = wapt_defect_bounds(X, 0.0, 1.0, F, g, 0.01)
    oracle = circle_defect_oracle(X(ts)[:, 0], ts)
    assert b.lower <= oracle + 1e-9
    assert oracle <= b.upper + b.model_err + 1e-3
    assert b.lower <= b.upper + b.model_err


def test_defect_heuristic_without_lipschitz():
    F = SetValuedField(1, lambda x: VPolytope([-x]), growth_c=1.0)
    X = Trajectory([0.0, 1.0], [[0.5], [0.5]], BOX1)
    b = wapt_defect_bounds(X, 0.0, 1.0, F, Grid(BOX1, 50), 0.05)
    assert not b.certified and b.lower <= b.upper + b.model_err


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_defect_bounds_ordered(a, b):
    X = Trajectory([0.0, 0.5, 1.0], [[a], [b], [a]], BOX1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        d = wapt_defect_bounds(X, 0.0, 1.0, NEG, Grid(BOX1, 40), 0.05)
    assert 0.0 <= d.lower <= d.upper + d.model_err
