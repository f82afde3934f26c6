import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pinchsim.channel import (
    POWER_FLOOR_W,
    ChannelConstants,
    CouplingModel,
    NoiseModel,
    add_power_noise,
    dbm_to_watt,
    free_space_gain,
    mwmp_received_signal_exact,
    mwsp_received_signal,
    perturb,
    waveguide_channel,
    watt_to_dbm,
)
from pinchsim.geometry import PAPlacement, Room, Waveguide

K = ChannelConstants()
ROOM = Room()


def test_constants():
    assert K.wavelength == pytest.approx(0.12491352416666666, rel=1e-12)
    assert K.alpha == pytest.approx(0.014508819248779661, rel=1e-12)
    assert K.beta == pytest.approx(72.54409624389831, rel=1e-12)
    assert K.default_spacing == pytest.approx(0.08661194545804361, rel=1e-12)


def test_constants_validation():
    with pytest.raises(ValueError):
        ChannelConstants(f_c=-1.0)


def test_fraunhofer():
    assert K.fraunhofer_distance(3) == pytest.approx(1.080982420673077, rel=1e-12)
    assert K.fraunhofer_distance(5) == pytest.approx(3.0027289463141025, rel=1e-12)


def test_free_space_gain():
    assert free_space_gain(1.0, K) == pytest.approx(9.940302415076964e-3, rel=1e-12)
    assert free_space_gain(3.0, K) == pytest.approx(3.3134341383589875e-3, rel=1e-12)


def test_waveguide_channel_magnitude_and_phase():
    h = waveguide_channel(3.0, K)
    assert abs(h) == pytest.approx(math.exp(-3.0 * K.alpha))
    assert waveguide_channel(0.0, K) == pytest.approx(1.0)


def test_dbm_round_trip():
    assert dbm_to_watt(20.0) == pytest.approx(0.1)
    assert dbm_to_watt(-80.0) == pytest.approx(1e-11)
    assert watt_to_dbm(dbm_to_watt(-37.5)) == pytest.approx(-37.5)


def test_coupling_full_transfer():
    cm = CouplingModel.full_transfer(2.0)
    assert cm.p_pin == pytest.approx(1.0)
    assert cm.p_wav == pytest.approx(0.0, abs=1e-15)


def test_mwsp_received_power_example():
    pl = PAPlacement(Waveguide.x_axis(ROOM), (3.0, 0.0, 3.0))
    p = abs(mwsp_received_signal((3.0, 5.0), pl, 0.1, K)) ** 2
    assert p == pytest.approx(2.663873984401008e-07, rel=1e-10)


def test_mwsp_rejects_arrays():
    pl = PAPlacement(Waveguide.x_axis(ROOM), (3.0, 0.0, 3.0), 3, K.default_spacing)
    with pytest.raises(ValueError):
        mwsp_received_signal((3.0, 5.0), pl, 0.1, K)


def test_array_broadside_gain():
    # user right below the center of the array: equal distances, N-fold amplitude
    pl = PAPlacement(Waveguide.x_axis(ROOM), (3.0, 0.0, 3.0), 3, K.default_spacing)
    single = PAPlacement(Waveguide.x_axis(ROOM), (3.0, 0.0, 3.0))
    p3 = abs(mwmp_received_signal_exact((3.0, 0.0), pl, 0.1, K, uniform_loss=True)) ** 2
    p1 = abs(mwsp_received_signal((3.0, 0.0), single, 0.1, K)) ** 2
    assert p3 / p1 == pytest.approx(9.0, rel=1e-3)


def test_noise_rms_equals_noise_power():
    noise = NoiseModel.from_dbm(-60.0, seed=3)
    received, draw = add_power_noise(np.full(200_000, 1.0), noise)
    assert np.std(draw) == pytest.approx(1e-9, rel=0.03)
    assert abs(np.mean(draw)) < 1e-11


def test_noise_floor_and_zero_noise():
    received, draw = add_power_noise(np.array([1e-9]), NoiseModel(0.0))
    assert received[0] == 1e-9 and draw[0] == 0.0
    received, _ = perturb(np.array([1e-12]), 1.0, np.array([-5.0]))
    assert received[0] == POWER_FLOOR_W


def test_noise_substreams_reproducible():
    n = NoiseModel(1e-6, seed=11)
    a = n.generator(4, 2).standard_normal(5)
    b = n.generator(4, 2).standard_normal(5)
    c = n.generator(2, 4).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_noise_validation():
    with pytest.raises(ValueError):
        NoiseModel(-1.0)


@given(st.floats(0.5, 20.0))
def test_gain_inverse_distance(d):
    assert free_space_gain(d, K) * d == pytest.approx(free_space_gain(1.0, K), rel=1e-12)
