import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tactwin.acceptance import replay
from tactwin.control import (GripCommand, GripConfig, GripController, Phase, detect_handover,
                             grip_target, grip_update, slip_margin)
from tactwin.decoding import DecodedState
from tactwin.errors import InvalidInput
from tactwin.scenarios import gen_scenario

DT = 0.02


def ds(fx=0.0, fy=0.0, fz=5.52, t=0.0):
    tau = math.hypot(fx, fy)
    theta = math.degrees(math.atan2(fy, fx)) if tau else None
    return DecodedState(25.0, fz, tau, theta, fx, fy, t_s=t)


def stream(fy_values, rate=50.0):
    return [ds(fy=f, t=i / rate) for i, f in enumerate(fy_values)]


def run_detector(states, cfg):
    ctl = GripController(cfg)
    return [e for e in (ctl.step(s)[1] for s in states) if e is not None]


class TestConfig:
    def test_gain_below_inverse_mu(self):
        with pytest.raises(InvalidInput):
            GripConfig(mu=0.5, gain=1.9)

    def test_clamps_ordered(self):
        with pytest.raises(InvalidInput):
            GripConfig(fz_min_N=9.0, fz_max_N=5.0)


class TestSlipMargin:
    def test_initial_operating_point(self):
        assert slip_margin(ds(fy=0.80), 0.5) == pytest.approx(1.96)

    def test_unloaded(self):
        assert slip_margin(ds(fz=0.0), 0.5) == 0.0

    def test_slipping(self):
        assert slip_margin(ds(fx=2.0, fz=2.0), 0.5) == pytest.approx(-1.0)


class TestTarget:
    def test_clamped_at_minimum(self):
        assert grip_target(0.80, GripConfig()) == 5.52

    def test_peak(self):
        tau = math.hypot(1.24, 1.56)
        assert tau == pytest.approx(1.99, abs=0.005)
        assert grip_target(tau, GripConfig()) == pytest.approx(8.28, rel=0.005)

    def test_zero_floor(self):
        assert grip_target(0.0, GripConfig(fz_min_N=0.0)) == 0.0

    def test_ceiling(self):
        assert grip_target(5.0, GripConfig()) == 9.0


class TestUpdate:
    @settings(max_examples=200, deadline=None)
    @given(prev=st.floats(5.52, 9.0), tau=st.floats(0, 3), dt=st.floats(1e-3, 0.5))
    def test_rate_limit(self, prev, tau, dt):
        cfg = GripConfig()
        cmd = grip_update(ds(fx=tau), cfg, GripCommand(prev, 0.0), dt)
        assert abs(cmd.fz_cmd_N - prev) <= cfg.rate_limit_N_per_s * dt + 1e-12
        assert cfg.fz_min_N - 1e-12 <= cmd.fz_cmd_N <= cfg.fz_max_N + 1e-12

    def test_phases(self):
        cfg = GripConfig()
        cmd = GripCommand(5.52, 0.0)
        cmd = grip_update(ds(fy=1.9), cfg, cmd, DT)
        assert cmd.phase is Phase.JAMMING
        for _ in range(100):
            cmd = grip_update(ds(fy=1.9), cfg, cmd, DT)
        assert cmd.phase is Phase.STATIONARY
        cmd = grip_update(ds(fy=0.5), cfg, cmd, DT)
        assert cmd.phase is Phase.RECOVERY

    def test_small_changes_do_not_chatter(self):
        cfg = GripConfig()
        cmd = GripCommand(8.0, 0.0)
        cmd = grip_update(ds(fy=8.02 / 4.16), cfg, cmd, DT)
        assert cmd.phase is Phase.STATIONARY

    def test_margin_definition(self):
        cmd = grip_update(ds(fy=1.0), GripConfig(), GripCommand(5.52, 0.0), DT)
        assert cmd.margin_N == pytest.approx(0.5 * cmd.fz_cmd_N - 1.0)

    def test_nonpositive_dt(self):
        with pytest.raises(InvalidInput):
            grip_update(ds(), GripConfig(), GripCommand(5.52, 0.0), 0.0)

    def test_recovery_convergence(self):
        cfg = GripConfig()
        ctl = GripController(cfg)
        t = 0.0
        for _ in range(100):
            ctl.step(ds(fy=1.9, t=t))
            t += DT
        assert ctl.command.fz_cmd_N > 7.5
        release = t
        while ctl.command.fz_cmd_N > 5.52 * 1.02:
            ctl.step(ds(fy=0.80, t=t))
            t += DT
        assert t - release <= 3.0


class TestHandover:
    cfg = GripConfig()

    def test_constant(self):
        assert run_detector(stream([2.9] * 200), self.cfg) == []

    def test_step_drop(self):
        fy = [2.9] * 100 + list(np.linspace(2.9, 0.3, 16)) + [0.3] * 50
        events = run_detector(stream(fy), self.cfg)
        assert len(events) == 1
        assert events[0].latency_s <= 0.42
        assert events[0].confidence >= 0.6

    def test_slow_unloading(self):
        fy = np.linspace(2.9, 2.61, 251)
        assert run_detector(stream(fy), self.cfg) == []

    def test_latched(self):
        fy = [2.9] * 60 + [0.3] * 30 + [2.9] * 60 + [0.3] * 30
        assert len(run_detector(stream(fy), self.cfg)) == 1

    def test_disabled(self):
        cfg = GripConfig(handover_enabled=False)
        fy = [2.9] * 100 + [0.3] * 50
        assert run_detector(stream(fy), cfg) == []

    def test_other_axis(self):
        cfg = GripConfig(gravity_axis="x")
        states = [ds(fx=2.9 if i < 100 else 0.3, t=i / 50) for i in range(150)]
        assert len(run_detector(states, cfg)) == 1
        assert run_detector(stream([2.9] * 100 + [0.3] * 50), cfg) == []

    def test_short_window(self):
        assert detect_handover(stream([2.9, 0.3]), self.cfg) is None

    @pytest.mark.parametrize("seed", range(5))
    def test_monotone_in_drop_frac(self, seed):
        rng = np.random.default_rng(seed)
        fy = np.concatenate([np.full(80, 2.5), np.full(40, rng.uniform(0.2, 2.4))])
        fy = fy + rng.normal(0, 0.02, fy.size)
        fired = [bool(run_detector(stream(fy), GripConfig(handover_drop_frac=f)))
                 for f in (0.2, 0.4, 0.6, 0.8)]
        for lower, higher in zip(fired, fired[1:]):
            assert higher <= lower


def test_no_false_handover_while_pouring(gripper_params, gripper_cal):
    trace = replay("tea_fig6", gripper_params, gripper_cal)
    start = gen_scenario("tea_fig6").segment_starts()[-2]
    assert [e for e in trace.events if e.t_s < start] == []


def test_friction_cone_over_jamming_replay(gripper_params, gripper_cal):
    trace = replay("jamming_fig4c", gripper_params, gripper_cal)
    cfg = GripConfig()
    for row in trace.rows:
        if row.command.fz_cmd_N < cfg.fz_max_N:
            assert cfg.mu * row.command.fz_cmd_N >= row.truth.f_tau_N
