"""Staged inverse map: temperature, then normal force, then tangential force."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from .calibration import CalibrationSet
from .errors import DegenerateGain, InvalidInput, RangeExceeded
from .physics import RawSample

# Normalised field may overshoot the sine peak by this much before it counts
# as leaving the monotone branch (absorbs temperature-decode error).
PEAK_OVERSHOOT = 0.01


class DecodeFlag(enum.Flag):
    NONE = 0
    TANGENTIAL_AT_REST = enum.auto()
    NORMAL_SATURATED = enum.auto()
    OUT_OF_CALIBRATION_RANGE = enum.auto()


@dataclass(frozen=True)
class DecodedState:
    temperature_C: float
    fz_N: float
    f_tau_N: float
    theta_deg: float | None
    fx_N: float
    fy_N: float
    flags: DecodeFlag = DecodeFlag.NONE
    dh_mm: float = 0.0
    t_s: float = 0.0

    @property
    def at_rest(self) -> bool:
        return bool(self.flags & DecodeFlag.TANGENTIAL_AT_REST)


class TemperatureReading(NamedTuple):
    temperature_C: float
    flags: DecodeFlag


class NormalReading(NamedTuple):
    fz_N: float
    dh_mm: float
    flags: DecodeFlag


class TangentialReading(NamedTuple):
    f_tau_N: float
    theta_deg: float | None
    fx_N: float
    fy_N: float
    flags: DecodeFlag


def decode_temperature(current_uA: float, cal: CalibrationSet) -> TemperatureReading:
    if not current_uA > 0:
        raise InvalidInput(f"current must be positive, got {current_uA}")
    temp = float(cal.temperature(current_uA))
    flags = DecodeFlag.NONE
    # judged on the measured current, so fit residual near the ends cannot flag
    slack = 1e-9 * cal.current_max_uA
    if not cal.current_min_uA - slack <= current_uA <= cal.current_max_uA + slack:
        flags |= DecodeFlag.OUT_OF_CALIBRATION_RANGE
    return TemperatureReading(temp, flags)


def decode_normal(freq_Hz: float, cal: CalibrationSet) -> NormalReading:
    """Normal force and compression from the timer frequency.

    A frequency above the rest value (sensor pulled rather than pressed)
    decodes to zero force and is flagged out of range.
    """
    if not freq_Hz > 0:
        raise InvalidInput(f"frequency must be positive, got {freq_Hz}")
    shift = cal.f0_Hz - freq_Hz
    flags = DecodeFlag.NONE
    if shift <= 0:
        if shift < 0:
            flags |= DecodeFlag.OUT_OF_CALIBRATION_RANGE
        return NormalReading(0.0, 0.0, flags)
    if shift > cal.fz_map.x_max:
        shift = cal.fz_map.x_max
        flags |= DecodeFlag.NORMAL_SATURATED
    fz = max(0.0, cal.fz_map(shift))
    return NormalReading(fz, shift / -cal.dh_slope_Hz_per_mm, flags)


def compensate_hall(bx: float, by: float, bz: float, temperature_C: float,
                    cal: CalibrationSet) -> tuple[float, float, float]:
    gain = 1.0 + cal.gamma_T_per_C * (temperature_C - cal.t_ref_C)
    if gain <= 0:
        raise DegenerateGain(f"Hall gain {gain:.4f} at {temperature_C:.1f} C is not positive")
    return bx / gain, by / gain, bz / gain


def _dh_for_force(fz_N: float, cal: CalibrationSet) -> float:
    if fz_N <= 0:
        return 0.0
    return cal.fz_map.inverse(fz_N) / -cal.dh_slope_Hz_per_mm


def decode_tangential(bx: float, by: float, fz_N: float,
                      cal: CalibrationSet) -> TangentialReading:
    """Tangential force magnitude and direction from a drift-compensated field.

    The radial field is divided by the calibrated amplitude at the
    compression implied by fz_N, mapped through `cal.tau_transform`, and then
    through the fitted tangential map.
    """
    m_r = math.hypot(bx, by)
    if m_r < cal.rest_threshold_uT:
        return TangentialReading(0.0, None, 0.0, 0.0, DecodeFlag.TANGENTIAL_AT_REST)
    u = m_r / cal.m0(_dh_for_force(fz_N, cal))
    flags = DecodeFlag.NONE
    if cal.tau_transform == "phase":
        if u > 1.0 + PEAK_OVERSHOOT:
            raise RangeExceeded(f"normalised field {u:.4f} beyond the sine peak")
        x = math.asin(min(u, 1.0))
    else:
        if u > cal.tau_map.x_max:
            raise RangeExceeded(f"field {u:.1f} beyond the calibrated branch "
                                f"(max {cal.tau_map.x_max:.1f})")
        x = u
    if x > cal.tau_map.x_max:
        flags |= DecodeFlag.OUT_OF_CALIBRATION_RANGE
    f_tau = max(0.0, cal.tau_map(x))
    theta = math.atan2(by, bx)
    return TangentialReading(f_tau, math.degrees(theta), f_tau * math.cos(theta),
                             f_tau * math.sin(theta), flags)


def decode(sample: RawSample, cal: CalibrationSet) -> DecodedState:
    """Full decode in dependency order; each stage feeds the next."""
    temp = decode_temperature(sample.current_uA, cal)
    normal = decode_normal(sample.freq_Hz, cal)
    bx, by, _ = compensate_hall(sample.bx_uT, sample.by_uT, sample.bz_uT,
                                temp.temperature_C, cal)
    tang = decode_tangential(bx, by, normal.fz_N, cal)
    return DecodedState(
        temperature_C=temp.temperature_C,
        fz_N=normal.fz_N,
        f_tau_N=tang.f_tau_N,
        theta_deg=tang.theta_deg,
        fx_N=tang.fx_N,
        fy_N=tang.fy_N,
        flags=temp.flags | normal.flags | tang.flags,
        dh_mm=normal.dh_mm,
        t_s=sample.t_s,
    )
