import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tactwin import physics
from tactwin.decoding import (DecodeFlag, compensate_hall, decode, decode_normal,
                              decode_tangential, decode_temperature)
from tactwin.errors import DegenerateGain, InvalidInput, RangeExceeded
from tactwin.physics import SensorParams, TactileState


def angle_diff(a, b):
    return abs((a - b + 180.0) % 360.0 - 180.0)


def roundtrip(state, params, cal):
    return decode(physics.forward_sample(state, params), cal)


class TestTemperature:
    @pytest.mark.parametrize("T", [20.0, 25.0, 50.0, 80.0])
    def test_round_trip(self, T, params, cal):
        current = physics.iongel_current(TactileState(T), params.iongel)
        reading = decode_temperature(current, cal)
        assert reading.temperature_C == pytest.approx(T, abs=0.5)
        assert reading.flags == DecodeFlag.NONE

    def test_extrapolation_flagged(self, cal):
        reading = decode_temperature(10 * cal.current_max_uA, cal)
        assert reading.flags & DecodeFlag.OUT_OF_CALIBRATION_RANGE

    def test_nonpositive_current(self, cal):
        with pytest.raises(InvalidInput):
            decode_temperature(0.0, cal)


class TestNormal:
    def test_rest(self, cal):
        assert decode_normal(cal.f0_Hz, cal)[:2] == (0.0, 0.0)

    def test_published_profile(self, published_cal):
        assert decode_normal(5000 - 600, published_cal).fz_N == pytest.approx(1.0, abs=1e-12)
        fz, dh, _ = decode_normal(5000 - 1800, published_cal)
        assert fz == pytest.approx(7.0) and dh == pytest.approx(2.0)

    def test_fitted_profile(self, cal):
        fz, dh, _ = decode_normal(3200.0, cal)
        assert fz == pytest.approx(7.0, abs=0.03) and dh == pytest.approx(2.0, abs=1e-6)

    def test_pulled_sensor(self, cal):
        reading = decode_normal(cal.f0_Hz + 50, cal)
        assert reading.fz_N == 0.0
        assert reading.flags & DecodeFlag.OUT_OF_CALIBRATION_RANGE

    def test_saturation_flag(self, cal):
        reading = decode_normal(100.0, cal)
        assert reading.flags & DecodeFlag.NORMAL_SATURATED
        assert reading.fz_N == pytest.approx(cal.fz_map(cal.fz_map.x_max))


class TestHallCompensation:
    def test_reference_temperature_unchanged(self, cal):
        assert compensate_hall(3.0, -4.0, 5.0, cal.t_ref_C, cal) == (3.0, -4.0, 5.0)

    def test_arithmetic_example(self, cal):
        c = dataclasses.replace(cal, gamma_T_per_C=-0.001)
        bx, by, bz = compensate_hall(94.5, 0.0, 0.0, c.t_ref_C + 55, c)
        assert bx == pytest.approx(100.0) and by == 0.0 and bz == 0.0

    def test_hot_field_matches_reference(self, params, cal):
        load = dict(fz_N=1.0, fx_N=0.4)
        hot = physics.halbach_field(TactileState(80.0, **load), params.halbach,
                                    params.capacitor)
        ref = physics.halbach_field(TactileState(25.0, **load), params.halbach,
                                    params.capacitor)
        comp = compensate_hall(*hot, 80.0, cal)
        assert comp[0] == pytest.approx(ref[0], rel=0.005)

    def test_degenerate_gain(self, cal):
        c = dataclasses.replace(cal, gamma_T_per_C=-0.1)
        with pytest.raises(DegenerateGain):
            compensate_hall(1.0, 1.0, 1.0, c.t_ref_C + 20, c)


class TestTangential:
    def test_rest(self, cal):
        r = decode_tangential(0.0, 0.0, 2.0, cal)
        assert r.f_tau_N == 0.0 and r.theta_deg is None
        assert r.flags & DecodeFlag.TANGENTIAL_AT_REST

    def test_published_profile_values(self, published_cal):
        fz = 7.0  # dh = 2 mm
        assert decode_tangential(10531.0, 0.0, fz, published_cal).f_tau_N == pytest.approx(1.0)
        assert decode_tangential(10908.0, 0.0, fz, published_cal).f_tau_N == pytest.approx(2.0)

    def test_published_profile_beyond_branch(self, published_cal):
        with pytest.raises(RangeExceeded):
            decode_tangential(11000.0, 0.0, 7.0, published_cal)

    def test_three_four_five(self, cal):
        r = decode_tangential(3.0 * 100, 4.0 * 100, 0.0, cal)
        assert r.theta_deg == pytest.approx(53.13, abs=0.01)
        assert r.fx_N == pytest.approx(0.6 * r.f_tau_N)
        assert r.fy_N == pytest.approx(0.8 * r.f_tau_N)

    def test_beyond_sine_peak(self, cal):
        with pytest.raises(RangeExceeded):
            decode_tangential(1.05 * cal.m0(0.0), 0.0, 0.0, cal)


class TestDecode:
    def test_rest_round_trip(self, params, cal):
        d = roundtrip(TactileState(25.0), params, cal)
        assert d.temperature_C == pytest.approx(25.0, abs=0.5)
        assert d.fz_N == pytest.approx(0.0, abs=0.01)
        assert d.f_tau_N == 0.0 and d.theta_deg is None and d.at_rest

    @pytest.mark.parametrize("state", [TactileState(25.0, 5.52, 0.0, 0.80),
                                       TactileState(80.0, 3.0, 1.0, -0.5)])
    def test_state_round_trip(self, state, params, cal):
        d = roundtrip(state, params, cal)
        assert d.temperature_C == pytest.approx(state.temperature_C, abs=0.5)
        assert d.fz_N == pytest.approx(state.fz_N, abs=0.03)
        assert d.fx_N == pytest.approx(state.fx_N, abs=0.01)
        assert d.fy_N == pytest.approx(state.fy_N, abs=0.01)
        expect = math.degrees(math.atan2(state.fy_N, state.fx_N))
        assert angle_diff(d.theta_deg, expect) <= 2.0

    @settings(max_examples=150, deadline=None)
    @given(T=st.floats(20, 80), fz=st.floats(0, 7), tau=st.floats(0, 1.25),
           th=st.floats(-math.pi, math.pi))
    def test_round_trip_property(self, T, fz, tau, th, params, cal):
        s = TactileState(T, fz, tau * math.cos(th), tau * math.sin(th))
        d = roundtrip(s, params, cal)
        assert abs(d.temperature_C - T) <= 0.5
        assert abs(d.fz_N - fz) <= (0.01 if fz <= 1 else 0.03)
        if tau <= 1:
            assert abs(d.f_tau_N - tau) <= 0.01
        if tau >= 0.05:
            assert angle_diff(d.theta_deg, math.degrees(th)) <= 2.0

    def test_polar_consistency(self, params, cal):
        d = roundtrip(TactileState(40.0, 2.0, -0.3, 0.7), params, cal)
        th = math.radians(d.theta_deg)
        assert d.fx_N == d.f_tau_N * math.cos(th)
        assert d.fy_N == d.f_tau_N * math.sin(th)

    def test_load_does_not_move_temperature(self, gripper_params, gripper_cal):
        for T in np.linspace(20, 80, 7):
            free = roundtrip(TactileState(T), gripper_params, gripper_cal).temperature_C
            loaded = roundtrip(TactileState(T, 7.0, 2.0), gripper_params,
                               gripper_cal).temperature_C
            assert abs(loaded / free - 1) <= 0.01

    @pytest.mark.parametrize("fz", [0.5, 3.0, 7.0])
    def test_normal_force_thermal_invariance(self, fz, params, cal):
        cold = roundtrip(TactileState(20.0, fz), params, cal).fz_N
        hot = roundtrip(TactileState(80.0, fz), params, cal).fz_N
        assert abs(hot - cold) <= 0.03

    @pytest.mark.parametrize("deg", [-150.0, -60.0, 10.0, 100.0])
    def test_theta_independent_of_magnitude_and_normal(self, deg, params, cal):
        th = math.radians(deg)
        thetas = [roundtrip(TactileState(30.0, fz, k * math.cos(th), k * math.sin(th)),
                            params, cal).theta_deg
                  for k in (0.25, 0.5, 1.0, 1.25) for fz in (1.0, 4.0, 7.0)]
        assert max(angle_diff(t, deg) for t in thetas) <= 2.0

    def test_wrong_normal_force_degrades_tangential(self, params, cal):
        s = TactileState(25.0, 5.0, 0.6, 0.0)
        raw = physics.forward_sample(s, params)
        right = decode_tangential(raw.bx_uT, raw.by_uT, 5.0, cal).f_tau_N
        assert abs(right - 0.6) <= 0.01
        for wrong_fz in (2.5, 7.5):
            wrong = decode_tangential(raw.bx_uT, raw.by_uT, wrong_fz, cal).f_tau_N
            assert abs(wrong - 0.6) > 0.01

    def test_noisy_decode_reasonable(self, cal):
        p = SensorParams(noise_current_uA=1e-4, noise_freq_Hz=0.1, noise_field_uT=0.2,
                         rng_seed=2)
        d = decode(physics.forward_sample(TactileState(50.0, 2.0, 0.3), p, 0.5), cal)
        assert d.fz_N == pytest.approx(2.0, abs=0.05)
        assert d.f_tau_N == pytest.approx(0.3, abs=0.05)
