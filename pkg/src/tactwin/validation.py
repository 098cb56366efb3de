"""Residual audit of a calibration on a grid offset from the one it was fitted on."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import physics
from .calibration import CalibrationGridSpec, CalibrationSet
from .decoding import compensate_hall, decode
from .physics import SensorParams, TactileState

TOLERANCES = {
    "temperature": 0.5,        # C
    "normal_low": 0.01,        # N, Fz <= 1 N
    "normal_high": 0.03,       # N, Fz > 1 N
    "tangential": 0.01,        # N, F_tau <= 1 N
    "direction": 2.0,          # degrees, F_tau >= 0.05 N
    "hall": 0.005,             # relative field error after compensation
}
CHANNELS = tuple(TOLERANCES)

_DIRECTIONS_DEG = tuple(np.arange(-157.5, 180.0, 45.0))


@dataclass(frozen=True)
class ChannelResult:
    channel: str
    n: int
    max_error: float
    mean_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


@dataclass
class ValidationReport:
    entries: list[ChannelResult] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return {e.channel for e in self.entries} == set(CHANNELS)

    @property
    def passed(self) -> bool:
        return self.complete and all(e.passed for e in self.entries)

    def entry(self, channel: str) -> ChannelResult | None:
        return next((e for e in self.entries if e.channel == channel), None)

    def lines(self) -> list[str]:
        out = []
        for e in self.entries:
            mark = "PASS" if e.passed else "FAIL"
            out.append(f"[{mark}] {e.channel:<12} n={e.n:<5d} max={e.max_error:.4g} "
                       f"mean={e.mean_error:.4g} tol={e.tolerance:g}")
        if not self.complete:
            missing = sorted(set(CHANNELS) - {e.channel for e in self.entries})
            out.append("[INCOMPLETE] no held-out samples for: " + ", ".join(missing))
        return out


def _add(report, channel, errors):
    if errors:
        err = np.abs(np.asarray(errors, dtype=float))
        report.entries.append(ChannelResult(channel, len(err), float(err.max()),
                                            float(err.mean()), TOLERANCES[channel]))


def validate_calibration(cal: CalibrationSet, params: SensorParams,
                         holdout: CalibrationGridSpec | None = None) -> ValidationReport:
    """Decode forward-model samples on a held-out grid and score each channel.

    The default held-out grid is the default fit grid shifted by half a step.
    Failures are report entries, never exceptions.
    """
    grid = CalibrationGridSpec().shifted() if holdout is None else holdout
    hb, cap = params.halbach, params.capacitor
    t_ref = cal.t_ref_C
    report = ValidationReport()
    t = 0.0

    def run(state):
        nonlocal t
        t += 1.0
        return decode(physics.forward_sample(state, params, t), cal)

    _add(report, "temperature",
         [run(TactileState(float(T))).temperature_C - T for T in grid.temperatures_C])

    low, high = [], []
    for fz in grid.normal_forces_N:
        if physics.normal_displacement(float(fz), cap)[1] or fz > cal.fz_max_N:
            continue
        err = run(TactileState(t_ref, float(fz))).fz_N - fz
        (low if fz <= 1.0 else high).append(err)
    _add(report, "normal_low", low)
    _add(report, "normal_high", high)

    tang, direction = [], []
    if grid.tangential_points > 0:
        taus = np.linspace(0.0, min(1.0, hb.tau_max_N), grid.tangential_points + 1)
        taus = (taus[:-1] + taus[1:]) / 2
        for fz in grid.tangential_levels_N:
            if physics.normal_displacement(float(fz), cap)[1]:
                continue
            for k, tau in enumerate(taus):
                th = math.radians(_DIRECTIONS_DEG[k % len(_DIRECTIONS_DEG)])
                d = run(TactileState(t_ref, float(fz), tau * math.cos(th), tau * math.sin(th)))
                tang.append(d.f_tau_N - tau)
                if tau >= 0.05 and d.theta_deg is not None:
                    diff = (d.theta_deg - math.degrees(th) + 180.0) % 360.0 - 180.0
                    direction.append(diff)
    _add(report, "tangential", tang)
    _add(report, "direction", direction)

    hall = []
    load = dict(fz_N=0.0, fx_N=grid.drift_load_fraction * hb.tau_max_N)
    if grid.temperatures_C:
        ref = physics.halbach_field(TactileState(t_ref, **load), hb, cap)[0]
        for T in grid.temperatures_C:
            s = physics.forward_sample(TactileState(float(T), **load), params, 0.0)
            t_dec = decode(s, cal).temperature_C
            bx, _, _ = compensate_hall(s.bx_uT, s.by_uT, s.bz_uT, t_dec, cal)
            hall.append(bx / ref - 1.0)
    _add(report, "hall", hall)
    return report
