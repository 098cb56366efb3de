"""Adaptive grip force and handover recognition driven by decoded contacts."""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .decoding import DecodedState
from .errors import InvalidInput


class Phase(enum.Enum):
    STATIONARY = "Stationary"
    JAMMING = "Jamming"
    RECOVERY = "Recovery"


@dataclass(frozen=True)
class GripConfig:
    mu: float = 0.5
    gain: float = 4.16
    fz_min_N: float = 5.52
    fz_max_N: float = 9.0
    rate_limit_N_per_s: float = 10.0
    handover_drop_frac: float = 0.6
    handover_window_s: float = 0.4
    gravity_axis: str = "y"
    hysteresis_N: float = 0.05
    handover_enabled: bool = True

    def __post_init__(self):
        if self.mu <= 0:
            raise InvalidInput("mu must be positive")
        if self.gain < 1.0 / self.mu:
            raise InvalidInput(f"gain {self.gain} below 1/mu = {1 / self.mu:.3f}; "
                               "commands would leave the friction cone")
        if not self.fz_min_N < self.fz_max_N:
            raise InvalidInput("fz_min_N must be below fz_max_N")
        if self.rate_limit_N_per_s <= 0:
            raise InvalidInput("rate limit must be positive")
        if not 0 < self.handover_drop_frac < 1:
            raise InvalidInput("handover_drop_frac must lie in (0, 1)")
        if self.gravity_axis not in ("x", "y"):
            raise InvalidInput("gravity_axis must be 'x' or 'y'")


@dataclass(frozen=True)
class GripCommand:
    fz_cmd_N: float
    margin_N: float
    phase: Phase = Phase.STATIONARY


@dataclass(frozen=True)
class HandoverEvent:
    t_s: float
    latency_s: float
    confidence: float


def slip_margin(state: DecodedState, mu: float) -> float:
    """Friction reserve mu*Fz - |F_tau|; negative means the grasp slips."""
    return mu * state.fz_N - math.hypot(state.fx_N, state.fy_N)


def grip_target(f_tau_N: float, cfg: GripConfig) -> float:
    return min(max(cfg.gain * f_tau_N, cfg.fz_min_N), cfg.fz_max_N)


def grip_update(state: DecodedState, cfg: GripConfig, prev: GripCommand,
                dt_s: float) -> GripCommand:
    """Slew the grip command toward gain*F_tau, clamped and rate limited."""
    if not dt_s > 0:
        raise InvalidInput("dt_s must be positive")
    f_tau = math.hypot(state.fx_N, state.fy_N)
    target = grip_target(f_tau, cfg)
    max_step = cfg.rate_limit_N_per_s * dt_s
    cmd = prev.fz_cmd_N + min(max(target - prev.fz_cmd_N, -max_step), max_step)
    if target > prev.fz_cmd_N + cfg.hysteresis_N:
        phase = Phase.JAMMING
    elif target < prev.fz_cmd_N - cfg.hysteresis_N:
        phase = Phase.RECOVERY
    else:
        phase = Phase.STATIONARY
    return GripCommand(cmd, cfg.mu * cmd - f_tau, phase)


def _gravity_force(state: DecodedState, axis: str) -> float:
    return state.fy_N if axis == "y" else state.fx_N


def detect_handover(window, cfg: GripConfig) -> HandoverEvent | None:
    """Look for a sharp drop of the gravity-axis tangential force.

    The baseline is the median over the first half of the window (by time).
    The newest sample triggers when it falls to (1 - drop_frac) of the
    baseline and the force was last at or above the baseline no more than
    handover_window_s earlier; that instant is reported as the drop onset.
    """
    if len(window) < 2:
        return None
    t = np.array([s.t_s for s in window])
    f = np.array([_gravity_force(s, cfg.gravity_axis) for s in window])
    if t[-1] - t[0] < cfg.handover_window_s:
        return None
    first_half = t <= t[0] + (t[-1] - t[0]) / 2
    baseline = float(np.median(f[first_half]))
    if baseline <= 0 or f[-1] > (1 - cfg.handover_drop_frac) * baseline:
        return None
    above = np.flatnonzero(f[:-1] >= baseline)
    if len(above) == 0:
        return None
    latency = float(t[-1] - t[above[-1]])
    if latency > cfg.handover_window_s:
        return None
    return HandoverEvent(t_s=float(t[-1]), latency_s=latency,
                         confidence=1.0 - float(f[-1]) / baseline)


class GripController:
    """Per-gripper state machine: one command and one handover latch per stream."""

    def __init__(self, cfg: GripConfig, initial_fz_N: float | None = None):
        self.cfg = cfg
        fz0 = cfg.fz_min_N if initial_fz_N is None else initial_fz_N
        self.command = GripCommand(fz0, cfg.mu * fz0, Phase.STATIONARY)
        self.handed_over = False
        self._buffer: deque[DecodedState] = deque()
        self._last_t: float | None = None

    def step(self, state: DecodedState) -> tuple[GripCommand, HandoverEvent | None]:
        if self._last_t is not None:
            self.command = grip_update(state, self.cfg, self.command, state.t_s - self._last_t)
        else:
            f_tau = math.hypot(state.fx_N, state.fy_N)
            self.command = GripCommand(self.command.fz_cmd_N,
                                       self.cfg.mu * self.command.fz_cmd_N - f_tau,
                                       Phase.STATIONARY)
        self._last_t = state.t_s

        event = None
        self._buffer.append(state)
        horizon = 2 * self.cfg.handover_window_s
        while self._buffer and state.t_s - self._buffer[0].t_s > horizon + 1e-9:
            self._buffer.popleft()
        if self.cfg.handover_enabled and not self.handed_over:
            event = detect_handover(list(self._buffer), self.cfg)
            self.handed_over = event is not None
        return self.command, event
