"""
Forward models for the three-channel tactile unit.

Given a ground-truth contact (temperature, normal force, tangential force)
these functions synthesize what the hardware would report:

  ion-gel layer      current rises exponentially with temperature and is
                     almost blind to load
  floating capacitor timer frequency falls linearly with normal compression;
                     blind to shear, and blind to temperature when the gap
                     expansion and permittivity coefficients match
  Halbach film       radial field follows A*sin(k*dR) over the tangential
                     displacement dR, with the amplitude A depending on the
                     normal compression and on temperature

Units: degrees C, newtons, millimetres, hertz, microamps, microtesla.

These models are the oracle the decoder is tested against, so they are kept
deliberately closed-form.
"""

from __future__ import annotations

import dataclasses
import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, ParseError, RangeExceeded, SaturationWarning

T_MIN_C = 20.0
T_MAX_C = 80.0

# Normalisers of the ion-gel load factor: full-scale normal and tangential load.
_LEAK_FZ_SCALE_N = 7.0
_LEAK_TAU_SCALE_N = 2.0


@dataclass(frozen=True)
class TactileState:
    """Ground-truth contact state."""

    temperature_C: float
    fz_N: float = 0.0
    fx_N: float = 0.0
    fy_N: float = 0.0

    def __post_init__(self):
        for name in ("temperature_C", "fz_N", "fx_N", "fy_N"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInput(f"{name} must be finite")
        if self.fz_N < 0:
            raise InvalidInput(f"normal force must be >= 0, got {self.fz_N}")

    @property
    def f_tau_N(self) -> float:
        return math.hypot(self.fx_N, self.fy_N)

    @property
    def in_calibrated_range(self) -> bool:
        return T_MIN_C <= self.temperature_C <= T_MAX_C


@dataclass(frozen=True)
class RawSample:
    t_s: float
    current_uA: float
    freq_Hz: float
    bx_uT: float
    by_uT: float
    bz_uT: float

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise InvalidInput(f"{f.name} must be finite")
        if self.current_uA <= 0:
            raise InvalidInput(f"current must be positive, got {self.current_uA}")
        if self.freq_Hz <= 0:
            raise InvalidInput(f"frequency must be positive, got {self.freq_Hz}")


@dataclass(frozen=True)
class IonGelParams:
    i_ref_uA: float = 1.0
    growth_per_C: float = 0.02
    t_ref_C: float = 25.0
    force_leak: float = 0.0

    def __post_init__(self):
        if self.i_ref_uA <= 0:
            raise InvalidInput("i_ref_uA must be positive")
        if self.growth_per_C <= 0:
            raise InvalidInput("growth_per_C must be positive")
        if not 0.0 <= self.force_leak <= 0.01:
            raise InvalidInput("force_leak must lie in [0, 0.01]")


def _disc_area(diameter_mm: float) -> float:
    return math.pi * (diameter_mm / 2.0) ** 2


@dataclass(frozen=True)
class CapacitorParams:
    f0_Hz: float = 5000.0
    freq_slope_Hz_per_mm: float = -900.0
    k_seg1_N_per_mm: float = 1.5
    k_seg2_N_per_mm: float = 4.5
    dh_break_mm: float = 1.0 / 1.5
    dh_max_mm: float = 2.5
    cte_per_C: float = 5e-4
    it_per_C: float = 5e-4
    eps_r0: float = 3.0
    d0_mm: float = 1.0
    s1_mm2: float = _disc_area(4.5)
    s2_mm2: float = _disc_area(6.0)
    s3_mm2: float = _disc_area(7.5)
    k_e: float = 8.9875517923e9
    t_ref_C: float = 25.0

    def __post_init__(self):
        if self.freq_slope_Hz_per_mm >= 0:
            raise InvalidInput("freq_slope_Hz_per_mm must be negative")
        if self.k_seg1_N_per_mm <= 0:
            raise InvalidInput("k_seg1_N_per_mm must be positive")
        if self.k_seg2_N_per_mm <= self.k_seg1_N_per_mm:
            raise InvalidInput("second regime must be stiffer than the first")
        if not 0 < self.dh_break_mm < self.dh_max_mm:
            raise InvalidInput("need 0 < dh_break_mm < dh_max_mm")
        if self.f0_Hz + self.freq_slope_Hz_per_mm * self.dh_max_mm <= 0:
            raise InvalidInput("frequency would reach zero before saturation")

    @property
    def fz_break_N(self) -> float:
        return self.k_seg1_N_per_mm * self.dh_break_mm

    @property
    def fz_saturation_N(self) -> float:
        return self.fz_break_N + (self.dh_max_mm - self.dh_break_mm) * self.k_seg2_N_per_mm


@dataclass(frozen=True)
class HalbachParams:
    m0_uT: float = 2000.0
    beta_per_mm: float = 0.10
    k_m_per_mm: float = math.pi / 5.0
    gamma_T_per_C: float = -0.001
    t_ref_C: float = 25.0
    dr_max_mm: float = 2.5
    shear_stiffness_N_per_mm: float = 0.5
    contact_area_mm2: float = 100.0
    shear_modulus_kPa: float = 25.0
    elastomer_height_mm: float = 5.0

    def __post_init__(self):
        if self.m0_uT <= 0:
            raise InvalidInput("m0_uT must be positive")
        if self.k_m_per_mm <= 0 or self.dr_max_mm <= 0:
            raise InvalidInput("wavenumber and range must be positive")
        if self.k_m_per_mm * self.dr_max_mm > math.pi / 2 * (1 + 1e-12):
            raise InvalidInput("field is not monotone over the tangential range")
        expected = shear_stiffness(self.contact_area_mm2, self.shear_modulus_kPa,
                                   self.elastomer_height_mm)
        if not math.isclose(expected, self.shear_stiffness_N_per_mm, rel_tol=1e-9):
            raise InvalidInput(
                f"shear_stiffness_N_per_mm={self.shear_stiffness_N_per_mm} disagrees "
                f"with area*G/h={expected}")

    @property
    def tau_max_N(self) -> float:
        return self.shear_stiffness_N_per_mm * self.dr_max_mm

    def with_shear_stiffness(self, k_N_per_mm: float) -> "HalbachParams":
        """Copy with the shear modulus rescaled to give the requested stiffness."""
        g = k_N_per_mm * self.elastomer_height_mm / self.contact_area_mm2 * 1e3
        return dataclasses.replace(self, shear_modulus_kPa=g,
                                   shear_stiffness_N_per_mm=k_N_per_mm)


def shear_stiffness(area_mm2: float, shear_modulus_kPa: float, height_mm: float) -> float:
    """Lumped S*G/h in N/mm (kPa = 1e-3 N/mm^2)."""
    return area_mm2 * shear_modulus_kPa * 1e-3 / height_mm


@dataclass(frozen=True)
class SensorParams:
    iongel: IonGelParams = field(default_factory=IonGelParams)
    capacitor: CapacitorParams = field(default_factory=CapacitorParams)
    halbach: HalbachParams = field(default_factory=HalbachParams)
    noise_current_uA: float = 0.0
    noise_freq_Hz: float = 0.0
    noise_field_uT: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("noise_current_uA", "noise_freq_Hz", "noise_field_uT"):
            if getattr(self, name) < 0:
                raise InvalidInput(f"{name} must be >= 0")
        if self.rng_seed < 0:
            raise InvalidInput("rng_seed must be non-negative")

    @property
    def noiseless(self) -> bool:
        return self.noise_current_uA == 0 and self.noise_freq_Hz == 0 and self.noise_field_uT == 0

    def to_text(self) -> str:
        lines = ["# tactwin sensor parameters"]
        for key, value in _flatten(self):
            lines.append(f"{key} = {value!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SensorParams":
        known = dict(_flatten(cls()))
        values: dict[str, float | int] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = number', got {raw!r}", lineno)
            key, _, num = (part.strip() for part in line.partition("="))
            if key not in known:
                raise ParseError(f"unknown key {key!r}", lineno)
            try:
                values[key] = int(num) if key == "rng_seed" else float(num)
            except ValueError:
                raise ParseError(f"not a number: {num!r}", lineno) from None
        return _unflatten(values)


_SUBPARAMS = {"iongel": IonGelParams, "capacitor": CapacitorParams, "halbach": HalbachParams}


def _flatten(params: SensorParams):
    for f in dataclasses.fields(params):
        value = getattr(params, f.name)
        if f.name in _SUBPARAMS:
            for sub in dataclasses.fields(value):
                yield f"{f.name}.{sub.name}", getattr(value, sub.name)
        else:
            yield f.name, value


def _unflatten(values: dict) -> SensorParams:
    groups: dict[str, dict] = {name: {} for name in _SUBPARAMS}
    top = {}
    for key, value in values.items():
        if "." in key:
            group, name = key.split(".", 1)
            groups[group][name] = value
        else:
            top[key] = value
    subs = {name: cls(**groups[name]) for name, cls in _SUBPARAMS.items()}
    return SensorParams(**subs, **top)


def load_params(path) -> SensorParams:
    with open(path, encoding="utf-8") as fh:
        return SensorParams.from_text(fh.read())


def save_params(params: SensorParams, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(params.to_text())


# --------------------------------------------------------------------------
# channel models
# --------------------------------------------------------------------------

def iongel_current(state: TactileState, p: IonGelParams) -> float:
    """Ion-gel current in microamps."""
    load = min(1.0, (state.fz_N / _LEAK_FZ_SCALE_N + state.f_tau_N / _LEAK_TAU_SCALE_N) / 2.0)
    return p.i_ref_uA * math.exp(p.growth_per_C * (state.temperature_C - p.t_ref_C)) \
        * (1.0 + p.force_leak * load)


def normal_displacement(fz_N: float, p: CapacitorParams) -> tuple[float, bool]:
    """Compression of the elastomer under normal load, with a saturation flag.

    The stiffness is piecewise: k_seg1 up to the break displacement, k_seg2
    beyond it. The result is clamped at dh_max_mm.
    """
    if fz_N < 0:
        raise InvalidInput(f"normal force must be >= 0, got {fz_N}")
    fz_break = p.fz_break_N
    if fz_N <= fz_break:
        dh = fz_N / p.k_seg1_N_per_mm
    else:
        dh = p.dh_break_mm + (fz_N - fz_break) / p.k_seg2_N_per_mm
    if dh > p.dh_max_mm:
        return p.dh_max_mm, True
    return dh, False


def _checked_displacement(fz_N: float, p: CapacitorParams) -> float:
    dh, saturated = normal_displacement(fz_N, p)
    if saturated:
        warnings.warn(f"normal force {fz_N:.3f} N exceeds the measurable range; "
                      f"compression clamped at {p.dh_max_mm} mm", SaturationWarning,
                      stacklevel=3)
    return dh


def thermal_ratio(temperature_C: float, p: CapacitorParams) -> float:
    """Permittivity factor over gap factor; exactly 1.0 when cte == it."""
    dt = temperature_C - p.t_ref_C
    return (1.0 + p.it_per_C * dt) / (1.0 + p.cte_per_C * dt)


def capacitance_pF(state: TactileState, p: CapacitorParams) -> float:
    """Total floating-capacitor capacitance, C = eps_r(3S1+2S2+2S3)/(8 pi k d).

    The effective gap shrinks with compression so that the timer frequency,
    which is inversely proportional to C, moves by freq_slope per mm.
    """
    dh = _checked_displacement(state.fz_N, p)
    dt = state.temperature_C - p.t_ref_C
    eps_r = p.eps_r0 * (1.0 + p.it_per_C * dt)
    gap_m = p.d0_mm * (1.0 + p.freq_slope_Hz_per_mm * dh / p.f0_Hz) \
        * (1.0 + p.cte_per_C * dt) * 1e-3
    area_m2 = (3 * p.s1_mm2 + 2 * p.s2_mm2 + 2 * p.s3_mm2) * 1e-6
    return eps_r * area_m2 / (8 * math.pi * p.k_e * gap_m) * 1e12


def capacitor_frequency(state: TactileState, p: CapacitorParams) -> float:
    """Timer frequency in hertz; independent of (Fx, Fy) by construction."""
    dh = _checked_displacement(state.fz_N, p)
    return (p.f0_Hz + p.freq_slope_Hz_per_mm * dh) / thermal_ratio(state.temperature_C, p)


def field_amplitude(dh_mm: float, temperature_C: float, p: HalbachParams) -> float:
    return p.m0_uT * (1.0 + p.beta_per_mm * dh_mm) \
        * (1.0 + p.gamma_T_per_C * (temperature_C - p.t_ref_C))


def halbach_field(state: TactileState, p: HalbachParams,
                  cap: CapacitorParams) -> tuple[float, float, float]:
    """Field at the Hall chip, (bx, by, bz) in microtesla."""
    dh = _checked_displacement(state.fz_N, cap)
    f_tau = state.f_tau_N
    dr = f_tau / p.shear_stiffness_N_per_mm
    if dr > p.dr_max_mm * (1 + 1e-12):
        raise RangeExceeded(f"tangential displacement {dr:.4f} mm exceeds "
                            f"{p.dr_max_mm} mm (force {f_tau:.4f} N)")
    amp = field_amplitude(dh, state.temperature_C, p)
    phase = p.k_m_per_mm * dr
    bz = amp * math.cos(phase)
    if f_tau == 0.0:
        return 0.0, 0.0, bz
    m_r = amp * math.sin(phase)
    theta = math.atan2(state.fy_N, state.fx_N)
    return m_r * math.cos(theta), m_r * math.sin(theta), bz


def _time_key(t_s: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(t_s)))[0]


def forward_sample(state: TactileState, p: SensorParams, t_s: float = 0.0) -> RawSample:
    """All three channels for one instant, plus seeded Gaussian noise.

    The noise stream is derived from (rng_seed, bit pattern of t_s), so the
    result is a pure function of the arguments.
    """
    current = iongel_current(state, p.iongel)
    freq = capacitor_frequency(state, p.capacitor)
    bx, by, bz = halbach_field(state, p.halbach, p.capacitor)
    if not p.noiseless:
        rng = np.random.default_rng([p.rng_seed, _time_key(t_s)])
        e = rng.standard_normal(5)
        current += p.noise_current_uA * e[0]
        freq += p.noise_freq_Hz * e[1]
        bx += p.noise_field_uT * e[2]
        by += p.noise_field_uT * e[3]
        bz += p.noise_field_uT * e[4]
    return RawSample(t_s=float(t_s), current_uA=float(current), freq_Hz=float(freq),
                     bx_uT=float(bx), by_uT=float(by), bz_uT=float(bz))
