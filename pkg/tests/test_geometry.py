import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinchsim.geometry import (
    Axis,
    OutOfSegment,
    PAPlacement,
    Room,
    Waveguide,
    array_element_coords,
    perpendicular_distances,
    project_to_waveguide,
    signal_cosine,
    standard_waveguides,
    user_pa_distance,
)

ROOM = Room()
xs = st.floats(0.0, 6.0)
ys = st.floats(0.0, 10.0)


def test_room_validation():
    with pytest.raises(ValueError):
        Room(6.0, 10.0, -3.0)
    with pytest.raises(ValueError):
        Room(0.0, 10.0, 3.0)


def test_room_contains_and_clamp():
    assert ROOM.contains((6.0, 10.0))
    assert not ROOM.contains((6.1, 1.0))
    np.testing.assert_array_equal(ROOM.clamp([[-1.0, 11.0], [2.0, 3.0]]), [[0.0, 10.0], [2.0, 3.0]])


def test_user_pa_distance_example():
    # user (3, 5) on the floor, PA at the middle of the x-axis guide
    assert user_pa_distance((3.0, 5.0), (3.0, 0.0, 3.0)) == pytest.approx(math.sqrt(34.0), rel=1e-15)
    assert user_pa_distance((3.0, 5.0), (3.0, 0.0, 3.0)) == pytest.approx(5.830951894845301, rel=1e-12)


def test_user_pa_distance_broadcasts():
    users = np.array([[0.0, 0.0], [3.0, 4.0]])
    d = user_pa_distance(users, np.array([0.0, 0.0, 3.0]))
    np.testing.assert_allclose(d, [3.0, math.sqrt(34.0)])


def test_perpendicular_distances_example():
    d = perpendicular_distances((2.0, 3.0), ROOM)
    assert d.d_x == pytest.approx(4.242640687119285, rel=1e-12)
    assert d.d_y == pytest.approx(3.605551275463989, rel=1e-12)
    assert d.d_m == pytest.approx(3.0048979624449617, rel=1e-12)


def test_perpendicular_distances_on_guides_equal_height():
    d = perpendicular_distances([(3.0, 0.0), (0.0, 4.0), (3.0, 5.0)], ROOM)
    assert d.d_x[0] == pytest.approx(3.0)
    assert d.d_y[1] == pytest.approx(3.0)
    assert d.d_m[2] == pytest.approx(3.0)


def test_standard_waveguide_order():
    assert [wg.axis for wg in standard_waveguides(ROOM)] == [Axis.X, Axis.Y, Axis.DIAGONAL]


def test_parallel_guide_arc_includes_feed():
    wg = Waveguide.parallel_y(ROOM, 3.0)
    assert wg.arc_length((3.0, 5.0, 3.0)) == pytest.approx(8.0)
    with pytest.raises(ValueError):
        Waveguide.parallel_y(ROOM, 7.0)


def test_projection_examples():
    np.testing.assert_allclose(project_to_waveguide((2.0, 3.0), Waveguide.x_axis(ROOM), ROOM), [2.0, 0.0, 3.0])
    np.testing.assert_allclose(project_to_waveguide((2.0, 3.0), Waveguide.y_axis(ROOM), ROOM), [0.0, 3.0, 3.0])
    # diagonal foot: t = (6*2 + 10*3) / 136
    t = 42.0 / 136.0
    np.testing.assert_allclose(project_to_waveguide((2.0, 3.0), Waveguide.diagonal(ROOM), ROOM), [6 * t, 10 * t, 3.0])


@given(xs, ys)
def test_projection_distance_matches_perpendicular(x, y):
    d = perpendicular_distances((x, y), ROOM)
    for wg, expected in zip(standard_waveguides(ROOM), d):
        foot = project_to_waveguide((x, y), wg, ROOM)
        assert user_pa_distance((x, y), foot) == pytest.approx(float(expected), rel=1e-9, abs=1e-12)


def test_array_element_coords_and_out_of_segment():
    wg = Waveguide.x_axis(ROOM)
    coords = array_element_coords(wg, (3.0, 0.0, 3.0), [-0.1, 0.0, 0.1])
    np.testing.assert_allclose(coords[:, 0], [2.9, 3.0, 3.1])
    with pytest.raises(OutOfSegment):
        array_element_coords(wg, (0.05, 0.0, 3.0), [-0.1, 0.0, 0.1])


def test_placement_validation():
    wg = Waveguide.x_axis(ROOM)
    with pytest.raises(ValueError):
        PAPlacement(wg, (3.0, 0.0, 3.0), 2, 0.1)
    with pytest.raises(ValueError):
        PAPlacement(wg, (3.0, 0.0, 3.0), 3, 0.0)
    with pytest.raises(OutOfSegment):
        PAPlacement(wg, (3.0, 1.0, 3.0))
    pl = PAPlacement(wg, (3.0, 0.0, 3.0), 5, 0.1)
    np.testing.assert_array_equal(pl.indices, [-2, -1, 0, 1, 2])
    assert pl.center_arc == pytest.approx(3.0)


def test_signal_cosine_axis_formulas():
    cos = signal_cosine((5.0, 4.0), Waveguide.x_axis(ROOM), (3.0, 0.0, 3.0))
    assert cos == pytest.approx(2.0 / math.sqrt(4 + 16 + 9))
    cos = signal_cosine((5.0, 4.0), Waveguide.diagonal(ROOM), (3.0, 5.0, 3.0))
    expected = (6 * 2.0 + 10 * -1.0) / (math.sqrt(4 + 1 + 9) * math.sqrt(136))
    assert cos == pytest.approx(expected)


@settings(max_examples=50)
@given(xs, ys)
def test_signal_cosine_bounded(x, y):
    for wg in standard_waveguides(ROOM):
        c = signal_cosine((x, y), wg, tuple(wg.point_at(wg.length / 2, 3.0)))
        assert -1.0 <= c <= 1.0
