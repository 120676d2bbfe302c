import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svdyn.domains import Box, Circle, Grid, Trajectory, domain_from_dict
from svdyn.geometry import GeometryError


def test_box_validation_and_clip():
    with pytest.raises(GeometryError):
        Box((0.0,), (0.0,))
    B = Box((-1, -1), (1, 1))
    y, clipped = B.clip([2.0, 0.5])
    assert clipped and list(y) == [1.0, 0.5]
    assert domain_from_dict(B.to_dict()) == B


def test_circle_wrap_and_distance():
    C = Circle(1.0)
    assert C.wrap(1.25) == pytest.approx(0.25)
    assert C.wrap(-0.25) == pytest.approx(0.75)
    assert 0.0 <= float(C.wrap(-1e-18)) < 1.0
    assert C.distance([0.1], [0.9]) == pytest.approx(0.2)
    assert domain_from_dict(C.to_dict()) == C
    with pytest.raises(GeometryError):
        Circle(0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50, allow_nan=False))
def test_circle_wrap_range(x):
    r = float(Circle(1.0).wrap(x))
    assert 0.0 <= r < 1.0
    assert Circle(1.0).wrap(np.array([x]))[0] == r


def test_grid_cells_and_centers():
    g = Grid(Box((0,), (1,)), 4)
    assert g.n_cells == 4 and g.cell_radius == pytest.approx(0.125)
    assert list(g.cell_of(np.array([[0.0], [0.3], [1.0]]))) == [0, 1, 3]
    g2 = Grid(Box((-1, -1), (1, 1)), 10)
    assert g2.cells_per_axis == (10, 10)
    c = g2.cell_of(np.array([[0.05, -0.95]]))[0]
    assert np.allclose(g2.center(c), [0.1, -0.9])
    gc = Grid(Circle(), 10)
    cells, clipped = gc.cells_in_box([-0.15], [0.05])
    assert set(cells) == {8, 9, 0} and not clipped


def test_trajectory_eval_and_segments():
    X = Trajectory([0, 1, 3], [[0.0], [1.0], [0.0]])
    assert X(0.5)[0] == 0.5 and X(2.0)[0] == 0.5 and X(-1.0)[0] == 0.0
    with pytest.raises(GeometryError):
        X(3.5)
    starts, steps, durs = X.segments(-1, 2)
    assert durs.sum() == pytest.approx(3.0)
    with pytest.raises(GeometryError):
        Trajectory([0, 0], [[0.0], [1.0]])


def test_circle_trajectory_follows_actual_steps():
    C = Circle()
    X = Trajectory([0, 1], [[0.9], [0.1]], C, steps=[[0.2]])
    assert X(0.5)[0] == pytest.approx(0.0)
    Y = Trajectory([0, 1], [[0.9], [0.1]], C)  # shortest arc by default
    assert Y.steps[0, 0] == pytest.approx(0.2)
