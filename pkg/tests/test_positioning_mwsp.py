import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinchsim.channel import ChannelConstants, mwsp_received_signal
from pinchsim.geometry import Room
from pinchsim.positioning_mwsp import (
    DegenerateGeometry,
    build_linear_system,
    design_matrix,
    error_diagnostics,
    locate,
    rssi_range,
    solve_ls,
    triangle_area,
)
from pinchsim.scenario import make_scenario, noiseless_powers, radial_layout

K = ChannelConstants()
ROOM = Room()


def ceiling(pas, h=3.0):
    pas = np.asarray(pas, dtype=float)
    return np.column_stack([pas, np.full(len(pas), h)])


def exact_ranges(user, pas, h=3.0):
    return np.linalg.norm(ceiling(pas, h) - np.array([user[0], user[1], 0.0]), axis=1)


def test_rssi_range_inverse_of_example_power():
    assert rssi_range(2.663873984401008e-07, 3.0, 0.1, K) == pytest.approx(math.sqrt(34.0), rel=1e-12)


def test_rssi_range_inverse_square():
    d1 = rssi_range(1e-8, 2.0, 0.1, K)
    assert rssi_range(4e-8, 2.0, 0.1, K) == pytest.approx(d1 / 2.0, rel=1e-14)


def test_rssi_noiseless_round_trip():
    sc = make_scenario("nonparallel")
    users = np.random.default_rng(0).random((50, 2)) * [6.0, 10.0]
    p = noiseless_powers(sc, users)
    d = rssi_range(p, sc.pa_arcs(), sc.p_s, K)
    expected = np.linalg.norm(sc.pa_coords()[None] - np.c_[users, np.zeros(50)][:, None], axis=-1)
    np.testing.assert_allclose(d, expected, rtol=1e-12)


def test_design_matrix_right_triangle():
    A = design_matrix([(0, 0), (6, 0), (0, 10)])
    np.testing.assert_array_equal(A, [[12, 0], [0, 20]])
    assert np.linalg.det(A) == pytest.approx(240.0)


def test_collinear_raises():
    with pytest.raises(DegenerateGeometry):
        build_linear_system([1.0, 2.0, 3.0], [(0, 0), (3, 0), (6, 0)])


def test_exact_trilateration_example():
    pas = [(1.0, 0.0), (0.0, 1.0), (6.0, 10.0)]
    sys = build_linear_system(exact_ranges((2.0, 3.0), pas), pas)
    est = solve_ls(sys)
    assert np.hypot(est.x - 2.0, est.y - 3.0) <= 1e-9
    assert est.det_a == pytest.approx(8.0 * est.triangle_area, rel=1e-12)


def test_height_cancels():
    pas = [(1.0, 0.0), (0.0, 1.0), (6.0, 10.0)]
    a = solve_ls(build_linear_system(exact_ranges((2.0, 3.0), pas, 3.0), pas))
    b = solve_ls(build_linear_system(exact_ranges((2.0, 3.0), pas, 7.0), pas))
    np.testing.assert_allclose(a.raw, b.raw, atol=1e-9)


def test_joint_scaling_invariance():
    pas = [(1.0, 0.0), (0.0, 1.0), (6.0, 10.0)]
    sys = build_linear_system(exact_ranges((2.5, 4.0), pas) * 1.01, pas)
    a = solve_ls(sys).raw
    sys.A, sys.b = sys.A * 7.0, sys.b * 7.0
    np.testing.assert_allclose(solve_ls(sys).raw, a, rtol=1e-12)


def test_clamping_reported():
    pas = [(3.0, 0.0, 3.0), (0.0, 5.0, 3.0), (3.0, 5.0, 3.0)]
    sys = build_linear_system(exact_ranges((-1.0, 3.0), [p[:2] for p in pas]), pas)
    est = solve_ls(sys, ROOM)
    assert est.raw[0] == pytest.approx(-1.0)
    assert est.x == 0.0 and bool(est.clamped)


def test_batch_solve():
    sc = make_scenario("nonparallel")
    users = np.random.default_rng(1).random((200, 2)) * [6.0, 10.0]
    est = locate(noiseless_powers(sc, users), sc.pa_coords(), sc.pa_arcs(), sc.p_s, K, sc.room)
    assert np.max(np.hypot(*(est.xy - users).T)) <= 1e-9


def test_first_order_error_direction():
    pas = [(3.0, 0.0), (0.0, 5.0), (3.0, 5.0)]
    truth = np.array([2.0, 3.0])
    d = exact_ranges(truth, pas)
    d_noisy = d.copy()
    d_noisy[0] += 0.01
    sys = build_linear_system(d_noisy, ceiling(pas))
    est = solve_ls(sys)
    diag = error_diagnostics(sys, truth, est)
    realized = est.raw - truth
    predicted = np.linalg.solve(sys.A, diag.g_first_order)
    cos = realized @ predicted / (np.linalg.norm(realized) * np.linalg.norm(predicted))
    assert cos > 0.999
    np.testing.assert_allclose(diag.amplified, realized, atol=1e-12)


def test_zero_noise_diagnostics():
    pas = ceiling([(3.0, 0.0), (0.0, 5.0), (3.0, 5.0)])
    sys = build_linear_system(exact_ranges((2.0, 3.0), pas[:, :2]), pas)
    diag = error_diagnostics(sys, (2.0, 3.0), solve_ls(sys))
    np.testing.assert_allclose(diag.g_exact, 0.0, atol=1e-12)
    assert diag.realized_error <= 1e-9
    assert diag.det_a == pytest.approx(diag.eight_area)


@pytest.mark.parametrize("rel", [0.001, 0.005, 0.01])
def test_first_order_g_accuracy(rel):
    pas = ceiling([(3.0, 0.0), (0.0, 5.0), (3.0, 5.0)])
    truth = (1.5, 7.0)
    d = exact_ranges(truth, pas[:, :2])
    delta = rel * d * np.array([1.0, -0.7, 0.4])
    sys = build_linear_system(d + delta, pas)
    diag = error_diagnostics(sys, truth, solve_ls(sys))
    err = np.linalg.norm(diag.g_first_order - diag.g_exact) / np.linalg.norm(diag.g_exact)
    assert err < 0.05


def test_area_doubling_halves_amplification():
    base = np.array([(1.0, 1.0), (4.0, 1.5), (2.0, 5.0)])
    a1 = np.linalg.norm(np.linalg.inv(design_matrix(base)))
    scaled = base * math.sqrt(2.0)  # doubles the area
    a2 = np.linalg.norm(np.linalg.inv(design_matrix(scaled)))
    assert a2 == pytest.approx(a1 / math.sqrt(2.0), rel=1e-12)
    # at fixed g the error bound scales with 1/sqrt(area) per linear dimension, and with
    # 1/area when the triangle is stretched along one axis only
    stretched = base * np.array([2.0, 1.0])
    assert abs(triangle_area(stretched)) == pytest.approx(2.0 * abs(triangle_area(base)))
    g = np.array([0.3, -0.2])
    e1 = np.linalg.norm(np.linalg.solve(design_matrix(base), g))
    e2 = np.linalg.norm(np.linalg.solve(design_matrix(stretched), g))
    assert e2 < e1


coord = st.floats(-20.0, 20.0, allow_nan=False)


@settings(max_examples=100)
@given(coord, coord, st.floats(0.0, 6.0), st.floats(0.0, 10.0))
def test_translation_equivariance(dx, dy, ux, uy):
    pas = np.array([(3.0, 0.0), (0.0, 5.0), (3.0, 5.0)])
    user = np.array([ux, uy])
    a = solve_ls(build_linear_system(exact_ranges(user, pas) * 1.003, pas)).raw
    shift = np.array([dx, dy])
    b = solve_ls(build_linear_system(exact_ranges(user + shift, pas + shift) * 1.003, pas + shift)).raw
    np.testing.assert_allclose(b - shift, a, atol=1e-6)


def test_radial_layout_large_vs_small_triangle():
    large = radial_layout(ROOM, [(0.2, 2.5), (5.8, 2.5), (3.0, 10.0)])
    small = radial_layout(ROOM, [(2.5, 4.5), (3.5, 4.5), (3.0, 6.0)])
    assert abs(triangle_area([p.center for p in large])) == pytest.approx(21.0)
    assert abs(triangle_area([p.center for p in small])) == pytest.approx(0.75)
    # both placements can be used end to end
    for layout in (large, small):
        pa = np.array([p.center for p in layout])
        arcs = np.array([p.center_arc for p in layout])
        p = np.array([abs(mwsp_received_signal((3.0, 5.0), pl, 0.1, K)) ** 2 for pl in layout])
        est = locate(p, pa, arcs, 0.1, K, ROOM)
        assert np.hypot(est.x - 3.0, est.y - 5.0) < 1e-9
