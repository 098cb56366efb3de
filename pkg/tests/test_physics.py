import dataclasses
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tactwin import physics
from tactwin.errors import InvalidInput, ParseError, RangeExceeded, SaturationWarning
from tactwin.physics import (CapacitorParams, HalbachParams, IonGelParams, SensorParams,
                             TactileState)

temps = st.floats(20.0, 80.0)
fz_vals = st.floats(0.0, 7.0)
angles = st.floats(-math.pi, math.pi)


class TestIonGel:
    def test_reference_temperature_gives_i_ref(self):
        p = IonGelParams()
        assert physics.iongel_current(TactileState(25.0, 3.0, 1.0), p) == p.i_ref_uA

    def test_unit_exponent(self):
        p = IonGelParams()
        T = p.t_ref_C + 1 / p.growth_per_C
        assert physics.iongel_current(TactileState(T), p) == pytest.approx(math.e)

    def test_closed_form_example(self):
        p = IonGelParams(growth_per_C=0.03)
        assert physics.iongel_current(TactileState(50.0), p) == pytest.approx(2.117, abs=1e-3)

    @pytest.mark.parametrize("leak", [0.0, 0.005, 0.01])
    @settings(max_examples=50, deadline=None)
    @given(T=temps, fz=fz_vals, tau=st.floats(0.0, 2.0))
    def test_force_insensitivity(self, leak, T, fz, tau):
        p = IonGelParams(force_leak=leak)
        loaded = physics.iongel_current(TactileState(T, fz, tau), p)
        free = physics.iongel_current(TactileState(T), p)
        assert abs(loaded / free - 1) <= 0.01 + 1e-12

    def test_leak_bound_enforced(self):
        with pytest.raises(InvalidInput):
            IonGelParams(force_leak=0.02)


class TestCapacitor:
    def test_rest(self):
        p = CapacitorParams()
        assert physics.capacitor_frequency(TactileState(25.0), p) == p.f0_Hz

    def test_first_segment(self):
        p = CapacitorParams()
        dh, sat = physics.normal_displacement(1.0, p)
        assert dh == pytest.approx(0.6667, abs=1e-4) and not sat
        assert physics.capacitor_frequency(TactileState(25.0, 1.0), p) == pytest.approx(4400.0)

    def test_second_segment(self):
        p = CapacitorParams()
        assert physics.normal_displacement(7.0, p)[0] == pytest.approx(2.0)
        assert physics.capacitor_frequency(TactileState(25.0, 7.0), p) == pytest.approx(3200.0)

    def test_saturation_warns_and_clamps(self):
        p = CapacitorParams()
        with pytest.warns(SaturationWarning):
            f = physics.capacitor_frequency(TactileState(25.0, 20.0), p)
        assert f == pytest.approx(p.f0_Hz + p.freq_slope_Hz_per_mm * p.dh_max_mm)

    @settings(max_examples=100, deadline=None)
    @given(T=temps, fz=fz_vals, fx=st.floats(-1, 1), fy=st.floats(-1, 1))
    def test_tangential_insensitivity_bit_identical(self, T, fz, fx, fy):
        p = CapacitorParams()
        assert physics.capacitor_frequency(TactileState(T, fz, fx, fy), p) == \
            physics.capacitor_frequency(TactileState(T, fz), p)

    @settings(max_examples=100, deadline=None)
    @given(T=temps, fz=fz_vals)
    def test_thermal_self_compensation_bit_identical(self, T, fz):
        p = CapacitorParams()
        assert physics.capacitor_frequency(TactileState(T, fz), p) == \
            physics.capacitor_frequency(TactileState(25.0, fz), p)

    def test_mismatched_coefficients_drift(self):
        p = CapacitorParams(it_per_C=1e-3)
        assert physics.capacitor_frequency(TactileState(80.0, 2.0), p) != \
            physics.capacitor_frequency(TactileState(20.0, 2.0), p)

    def test_frequency_strictly_decreasing(self):
        p = CapacitorParams()
        f = [physics.capacitor_frequency(TactileState(25.0, fz), p)
             for fz in np.linspace(0, p.fz_saturation_N, 400)]
        assert np.all(np.diff(f) < 0)

    def test_capacitance_inverse_to_frequency(self):
        p = CapacitorParams()
        c0 = physics.capacitance_pF(TactileState(25.0), p)
        c7 = physics.capacitance_pF(TactileState(25.0, 7.0), p)
        f0 = physics.capacitor_frequency(TactileState(25.0), p)
        f7 = physics.capacitor_frequency(TactileState(25.0, 7.0), p)
        assert c7 / c0 == pytest.approx(f0 / f7)


class TestHalbach:
    def test_rest_field(self):
        hb, cap = HalbachParams(), CapacitorParams()
        bx, by, bz = physics.halbach_field(TactileState(25.0), hb, cap)
        assert (bx, by) == (0.0, 0.0) and bz == hb.m0_uT

    def test_diagonal_symmetry(self):
        hb, cap = HalbachParams(), CapacitorParams()
        bx, by, _ = physics.halbach_field(TactileState(25.0, 0.0, 0.4, 0.4), hb, cap)
        assert bx == pytest.approx(by, rel=1e-15)
        assert math.degrees(math.atan2(by, bx)) == pytest.approx(45.0)

    def test_sine_peak_at_range_bound(self):
        hb, cap = HalbachParams(), CapacitorParams()
        bx, by, bz = physics.halbach_field(TactileState(25.0, 0.0, hb.tau_max_N), hb, cap)
        assert math.hypot(bx, by) == pytest.approx(hb.m0_uT)
        assert bz == pytest.approx(0.0, abs=1e-9)

    def test_beyond_range_raises(self):
        hb = HalbachParams()
        with pytest.raises(RangeExceeded):
            physics.halbach_field(TactileState(25.0, 0.0, hb.tau_max_N * 1.01), hb,
                                  CapacitorParams())

    def test_radial_field_monotone(self):
        hb, cap = HalbachParams(), CapacitorParams()
        m = [math.hypot(*physics.halbach_field(TactileState(25.0, 2.0, t), hb, cap)[:2])
             for t in np.linspace(0, hb.tau_max_N, 300)]
        assert np.all(np.diff(m) > 0)

    @settings(max_examples=200, deadline=None)
    @given(tau=st.floats(1e-3, 1.25), th=angles, T=temps, fz=fz_vals)
    def test_direction_fidelity(self, tau, th, T, fz):
        s = TactileState(T, fz, tau * math.cos(th), tau * math.sin(th))
        bx, by, _ = physics.halbach_field(s, HalbachParams(), CapacitorParams())
        assert math.atan2(by, bx) == pytest.approx(math.atan2(s.fy_N, s.fx_N), abs=1e-12)

    def test_shear_stiffness_consistency(self):
        assert HalbachParams().shear_stiffness_N_per_mm == \
            pytest.approx(physics.shear_stiffness(100.0, 25.0, 5.0))
        with pytest.raises(InvalidInput):
            HalbachParams(shear_stiffness_N_per_mm=1.0)
        stiff = HalbachParams().with_shear_stiffness(2.0)
        assert stiff.tau_max_N == pytest.approx(5.0)

    def test_nonmonotone_wavenumber_rejected(self):
        with pytest.raises(InvalidInput):
            HalbachParams(k_m_per_mm=1.0)


class TestForwardSample:
    def test_rest_values(self):
        p = SensorParams()
        s = physics.forward_sample(TactileState(25.0), p)
        assert (s.current_uA, s.freq_Hz, s.bx_uT, s.by_uT, s.bz_uT) == \
            (1.0, 5000.0, 0.0, 0.0, 2000.0)

    def test_deterministic_with_noise(self):
        p = SensorParams(noise_current_uA=0.01, noise_freq_Hz=1.0, noise_field_uT=2.0,
                         rng_seed=3)
        st_ = TactileState(40.0, 2.0, 0.3, -0.2)
        assert physics.forward_sample(st_, p, 1.5) == physics.forward_sample(st_, p, 1.5)
        assert physics.forward_sample(st_, p, 1.5) != physics.forward_sample(st_, p, 1.52)
        other = dataclasses.replace(p, rng_seed=4)
        assert physics.forward_sample(st_, p, 1.5) != physics.forward_sample(st_, other, 1.5)

    def test_invalid_state(self):
        with pytest.raises(InvalidInput):
            TactileState(25.0, -1.0)
        with pytest.raises(InvalidInput):
            TactileState(float("nan"))

    def test_saturation_propagates_warning(self):
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            physics.forward_sample(TactileState(25.0, 12.0), SensorParams())
        assert any(issubclass(x.category, SaturationWarning) for x in w)


class TestParamsText:
    def test_round_trip(self, tmp_path):
        p = SensorParams(noise_field_uT=1.5, rng_seed=11,
                         halbach=HalbachParams().with_shear_stiffness(2.0))
        path = tmp_path / "p.txt"
        physics.save_params(p, path)
        assert physics.load_params(path) == p
        assert SensorParams.from_text(p.to_text()).to_text() == p.to_text()

    def test_comments_and_partial(self):
        p = SensorParams.from_text("# hello\n\nrng_seed = 9  # trailing\n"
                                   "capacitor.f0_Hz = 4000\n")
        assert p.rng_seed == 9 and p.capacitor.f0_Hz == 4000.0

    @pytest.mark.parametrize("text,line", [("bogus = 1\n", 1), ("rng_seed = 1\nnoise\n", 2),
                                           ("iongel.i_ref_uA = abc\n", 1)])
    def test_parse_errors(self, text, line):
        with pytest.raises(ParseError) as exc:
            SensorParams.from_text(text)
        assert exc.value.line == line
