"""
Calibration: fit the inverse maps from sweep data and manage bundles.

A calibration run mirrors the bench procedure: a temperature ramp for the
ion gel, a normal-load sweep for the capacitor, tangential sweeps at several
fixed compressions for the Halbach film, and a thermal sweep for the Hall
drift. `synthesize_sweeps` produces those sweeps from the forward model and
`fit_calibration` turns any set of sweeps (synthetic or read from CSV) into a
`CalibrationSet`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import least_squares

from . import physics
from .errors import (FitToleranceExceeded, InsufficientData, InvalidCalibration,
                     InvalidInput, ParseError, SchemaMismatch)
from .piecewise import PiecewiseLinear, fit_piecewise_linear
from .physics import SensorParams, TactileState

TEMP_TOLERANCE_C = 0.5
TAU_TRANSFORMS = ("phase", "linear")


@dataclass(frozen=True)
class CalibrationSet:
    """Fitted inverse maps for one sensor.

    tau_transform selects how the amplitude-normalised radial field u is
    mapped before `tau_map` is applied: "phase" uses arcsin(u) (the
    displacement phase of the sine), "linear" uses u itself.
    """

    temp_poly: tuple[float, float, float, float]
    current_min_uA: float
    current_max_uA: float
    f0_Hz: float
    dh_slope_Hz_per_mm: float
    fz_map: PiecewiseLinear
    tau_map: PiecewiseLinear
    tau_transform: str
    m0_grid: tuple[tuple[float, float], ...]
    gamma_T_per_C: float
    t_ref_C: float
    t_min_C: float
    t_max_C: float
    fz_max_N: float
    tau_max_N: float
    rest_threshold_uT: float
    provenance: str = ""

    def __post_init__(self):
        if len(self.temp_poly) != 4:
            raise InvalidCalibration("temp_poly must hold four coefficients")
        if self.dh_slope_Hz_per_mm >= 0:
            raise InvalidCalibration("frequency/displacement slope must be negative")
        if not self.fz_map.increasing or self.fz_map.break_y <= 0:
            raise InvalidCalibration("fz_map must have positive slopes and break force")
        if not self.tau_map.increasing:
            raise InvalidCalibration("tau_map must be increasing")
        if self.tau_transform not in TAU_TRANSFORMS:
            raise InvalidCalibration(f"unknown tau_transform {self.tau_transform!r}")
        dh = [g[0] for g in self.m0_grid]
        if len(self.m0_grid) < 2 or np.any(np.diff(dh) <= 0):
            raise InvalidCalibration("m0_grid needs >= 2 levels, strictly increasing in dh")
        if any(g[1] <= 0 for g in self.m0_grid):
            raise InvalidCalibration("m0_grid amplitudes must be positive")
        if not 0 < self.current_min_uA < self.current_max_uA:
            raise InvalidCalibration("bad current range")
        if self.rest_threshold_uT <= 0:
            raise InvalidCalibration("rest_threshold_uT must be positive")
        grid = np.linspace(self.current_min_uA, self.current_max_uA, 1000)
        if np.any(np.diff(P.polyval(grid, self.temp_poly)) <= 0):
            raise InvalidCalibration("temperature polynomial is not monotone "
                                     "over the calibrated current range")

    def temperature(self, current_uA):
        return P.polyval(current_uA, self.temp_poly)

    def m0(self, dh_mm: float) -> float:
        """Amplitude at compression dh, linear between grid levels and beyond them."""
        dh_grid = np.array([g[0] for g in self.m0_grid])
        amp = np.array([g[1] for g in self.m0_grid])
        i = int(np.clip(np.searchsorted(dh_grid, dh_mm) - 1, 0, len(dh_grid) - 2))
        w = (dh_mm - dh_grid[i]) / (dh_grid[i + 1] - dh_grid[i])
        return float(amp[i] + w * (amp[i + 1] - amp[i]))

    def to_dict(self) -> dict:
        return {
            "temp_poly": list(self.temp_poly),
            "current_min_uA": self.current_min_uA,
            "current_max_uA": self.current_max_uA,
            "f0_Hz": self.f0_Hz,
            "dh_slope_Hz_per_mm": self.dh_slope_Hz_per_mm,
            "fz_map": self.fz_map.to_dict(),
            "tau_map": self.tau_map.to_dict(),
            "tau_transform": self.tau_transform,
            "m0_grid": [list(g) for g in self.m0_grid],
            "gamma_T_per_C": self.gamma_T_per_C,
            "t_ref_C": self.t_ref_C,
            "t_min_C": self.t_min_C,
            "t_max_C": self.t_max_C,
            "fz_max_N": self.fz_max_N,
            "tau_max_N": self.tau_max_N,
            "rest_threshold_uT": self.rest_threshold_uT,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationSet":
        expected = set(cls.__dataclass_fields__)
        unknown, missing = set(d) - expected, expected - set(d)
        if unknown:
            raise InvalidCalibration(f"unknown keys: {sorted(unknown)}")
        if missing:
            raise InvalidCalibration(f"missing keys: {sorted(missing)}")
        kw = dict(d)
        kw["temp_poly"] = tuple(float(c) for c in d["temp_poly"])
        kw["fz_map"] = PiecewiseLinear.from_dict(d["fz_map"])
        kw["tau_map"] = PiecewiseLinear.from_dict(d["tau_map"])
        kw["m0_grid"] = tuple((float(a), float(b)) for a, b in d["m0_grid"])
        for name in ("current_min_uA", "current_max_uA", "f0_Hz", "dh_slope_Hz_per_mm",
                     "gamma_T_per_C", "t_ref_C", "t_min_C", "t_max_C", "fz_max_N",
                     "tau_max_N", "rest_threshold_uT"):
            kw[name] = float(d[name])
        return cls(**kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CalibrationSet":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc.msg), exc.lineno) from None
        if not isinstance(data, dict):
            raise InvalidCalibration("calibration bundle must be a JSON object")
        return cls.from_dict(data)


def load_calibration(path) -> CalibrationSet:
    with open(path, encoding="utf-8") as fh:
        return CalibrationSet.from_json(fh.read())


def save_calibration(cal: CalibrationSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cal.to_json())


# --------------------------------------------------------------------------
# fitters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TemperatureFit:
    coeffs: tuple[float, float, float, float]
    max_residual_C: float


def fit_temperature_poly(points, tolerance_C: float = TEMP_TOLERANCE_C) -> TemperatureFit:
    """Least-squares cubic T(I) through (current_uA, temperature_C) points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 8:
        raise InsufficientData(f"need at least 8 points, got {len(pts)}")
    current, temp = pts[:, 0], pts[:, 1]
    if np.ptp(temp) < 40.0:
        raise InsufficientData(f"points span {np.ptp(temp):.1f} C, need >= 40 C")
    if np.any(current <= 0):
        raise InvalidInput("currents must be positive")
    coeffs = P.polyfit(current, temp, 3)
    residual = float(np.max(np.abs(P.polyval(current, coeffs) - temp)))
    if residual > tolerance_C:
        raise FitToleranceExceeded(
            f"cubic residual {residual:.3f} C exceeds {tolerance_C} C")
    return TemperatureFit(tuple(float(c) for c in coeffs), residual)


def fit_hall_drift(points, t_ref_C: float = 25.0) -> float:
    """Slope of (ratio - 1) against (T - t_ref), forced through (t_ref, 1)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 4:
        raise InsufficientData(f"need at least 4 points, got {len(pts)}")
    dt = pts[:, 0] - t_ref_C
    denom = float(np.dot(dt, dt))
    if denom == 0:
        raise InsufficientData("all drift points sit at the reference temperature")
    return float(np.dot(dt, pts[:, 1] - 1.0) / denom)


def fit_frequency_line(points) -> tuple[float, float]:
    """(f0, slope) of freq = f0 + slope*dh through (dh_mm, freq_Hz) points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 2 or np.ptp(pts[:, 0]) == 0:
        raise InsufficientData("need at least two distinct displacements")
    f0, slope = P.polyfit(pts[:, 0], pts[:, 1], 1)
    return float(f0), float(slope)


def fit_sine_amplitude(points) -> tuple[float, float]:
    """(A, c) of M_r = A*sin(c*F) through (f_tau_N, m_r_uT) points of one level."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    force, field_ = pts[:, 0], pts[:, 1]
    if len(pts) < 3 or np.count_nonzero(force > 0) < 2:
        raise InsufficientData("tangential sweep needs at least 3 points with 2 loaded")
    i = int(np.argmax(field_))
    a0 = float(field_[i])
    ratio = np.clip(field_[force > 0] / a0, -1.0, 1.0)
    c0 = float(np.median(np.arcsin(ratio) / force[force > 0]))
    c0 = c0 if c0 > 0 else math.pi / 2 / float(force.max())

    def residual(p):
        return p[0] * np.sin(p[1] * force) - field_

    sol = least_squares(residual, [a0, c0], x_scale=[a0, c0], xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, method="lm")
    return float(sol.x[0]), float(sol.x[1])


def _merge_duplicates(x, y, tol=1e-9):
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    xs, ys = [x[0]], [[y[0]]]
    for xi, yi in zip(x[1:], y[1:]):
        if xi - xs[-1] <= tol * max(1.0, abs(xi)):
            ys[-1].append(yi)
        else:
            xs.append(xi)
            ys.append([yi])
    return np.array(xs), np.array([np.mean(v) for v in ys])


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

SWEEP_CHANNELS = ("temp", "normal_freq", "normal_force", "tangential", "drift")


@dataclass
class SweepData:
    """Calibration sweep rows per channel.

    temp          (current_uA, temperature_C)
    normal_freq   (dh_mm, freq_Hz)
    normal_force  (freq_Hz, fz_N)
    tangential    dh_mm -> [(f_tau_N, m_r_uT), ...]
    drift         (temperature_C, field_ratio)
    """

    temp: list = field(default_factory=list)
    normal_freq: list = field(default_factory=list)
    normal_force: list = field(default_factory=list)
    tangential: dict = field(default_factory=dict)
    drift: list = field(default_factory=list)


@dataclass(frozen=True)
class CalibrationGridSpec:
    temperatures_C: tuple = tuple(np.linspace(20.0, 80.0, 13))
    normal_forces_N: tuple = tuple(np.linspace(0.0, 9.0, 37))
    tangential_levels_N: tuple = (0.0, 1.0, 3.0, 5.0, 7.0, 9.0)
    tangential_points: int = 26
    drift_load_fraction: float = 0.4

    def shifted(self) -> "CalibrationGridSpec":
        """Held-out grid: every axis moved by half a step, kept inside the range."""
        def mid(values):
            v = np.asarray(values, dtype=float)
            return tuple((v[:-1] + v[1:]) / 2) if len(v) > 1 else ()
        return CalibrationGridSpec(
            temperatures_C=mid(self.temperatures_C),
            normal_forces_N=mid(self.normal_forces_N),
            tangential_levels_N=mid(self.tangential_levels_N),
            tangential_points=max(self.tangential_points - 1, 0),
            drift_load_fraction=self.drift_load_fraction,
        )


def synthesize_sweeps(params: SensorParams, grid: CalibrationGridSpec,
                      t_ref_C: float | None = None) -> SweepData:
    """Run the forward model over a calibration grid, as a bench rig would."""
    hb, cap = params.halbach, params.capacitor
    t_ref = hb.t_ref_C if t_ref_C is None else t_ref_C
    sweeps = SweepData()
    t = 0.0

    def sample(state):
        nonlocal t
        t += 1.0
        return physics.forward_sample(state, params, t)

    for temp in grid.temperatures_C:
        s = sample(TactileState(float(temp)))
        sweeps.temp.append((s.current_uA, float(temp)))
    for fz in grid.normal_forces_N:
        dh, saturated = physics.normal_displacement(float(fz), cap)
        if saturated:
            continue
        s = sample(TactileState(t_ref, float(fz)))
        sweeps.normal_freq.append((dh, s.freq_Hz))
        sweeps.normal_force.append((s.freq_Hz, float(fz)))
    if grid.tangential_points > 0:
        taus = np.linspace(0.0, hb.tau_max_N, grid.tangential_points)
        for fz in grid.tangential_levels_N:
            dh, saturated = physics.normal_displacement(float(fz), cap)
            if saturated:
                continue
            rows = []
            for tau in taus:
                s = sample(TactileState(t_ref, float(fz), float(tau), 0.0))
                rows.append((float(tau), math.hypot(s.bx_uT, s.by_uT)))
            sweeps.tangential[dh] = rows
    drift_state = dict(fz_N=0.0, fx_N=grid.drift_load_fraction * hb.tau_max_N)
    ref = sample(TactileState(t_ref, **drift_state)).bx_uT
    for temp in grid.temperatures_C:
        s = sample(TactileState(float(temp), **drift_state))
        sweeps.drift.append((float(temp), s.bx_uT / ref))
    return sweeps


def fit_calibration(sweeps: SweepData, t_ref_C: float = 25.0, rest_threshold_uT: float = 1.0,
                    provenance: str = "") -> CalibrationSet:
    """Fit every inverse map from sweep data and assemble a validated bundle."""
    temp_fit = fit_temperature_poly(sweeps.temp)
    currents = [p[0] for p in sweeps.temp]
    temps = [p[1] for p in sweeps.temp]

    f0, dh_slope = fit_frequency_line(sweeps.normal_freq)
    nf = sorted(sweeps.normal_force, key=lambda p: f0 - p[0])
    fz_map = fit_piecewise_linear([(f0 - f, fz) for f, fz in nf])

    levels = sorted(sweeps.tangential)
    if len(levels) < 2:
        raise InsufficientData("tangential sweeps needed at >= 2 compression levels")
    m0_grid, xs, ys = [], [], []
    for dh in levels:
        rows = np.asarray(sweeps.tangential[dh], dtype=float)
        amp, _ = fit_sine_amplitude(rows)
        m0_grid.append((float(dh), amp))
        xs.append(np.arcsin(np.clip(rows[:, 1] / amp, 0.0, 1.0)))
        ys.append(rows[:, 0])
    x, y = _merge_duplicates(np.concatenate(xs), np.concatenate(ys))
    tau_map = fit_piecewise_linear(np.column_stack([x, y]))

    gamma = fit_hall_drift(sweeps.drift, t_ref_C)
    return CalibrationSet(
        temp_poly=temp_fit.coeffs,
        current_min_uA=float(min(currents)),
        current_max_uA=float(max(currents)),
        f0_Hz=f0,
        dh_slope_Hz_per_mm=dh_slope,
        fz_map=fz_map,
        tau_map=tau_map,
        tau_transform="phase",
        m0_grid=tuple(m0_grid),
        gamma_T_per_C=gamma,
        t_ref_C=float(t_ref_C),
        t_min_C=float(min(temps)),
        t_max_C=float(max(temps)),
        fz_max_N=float(max(p[1] for p in sweeps.normal_force)),
        tau_max_N=float(max(float(np.max(np.asarray(r)[:, 0])) for r in sweeps.tangential.values())),
        rest_threshold_uT=float(rest_threshold_uT),
        provenance=provenance,
    )


def generate_calibration(params: SensorParams | None = None,
                         grid: CalibrationGridSpec | None = None) -> CalibrationSet:
    params = params or SensorParams()
    grid = grid or CalibrationGridSpec()
    sweeps = synthesize_sweeps(params, grid)
    threshold = 3.0 * params.noise_field_uT if params.noise_field_uT > 0 else 1.0
    tag = "synthetic" if params.noiseless else f"synthetic seed={params.rng_seed}"
    return fit_calibration(sweeps, t_ref_C=params.halbach.t_ref_C,
                           rest_threshold_uT=threshold, provenance=tag)


def published_constants_calibration() -> CalibrationSet:
    """Bundle carrying the published slopes and breakpoints verbatim.

    Normal map on (f0 - f): 1/600 N/Hz up to 1 N, 1/200 N/Hz beyond.
    Frequency/displacement: -900 Hz/mm. Tangential map on the raw radial
    field at 2 mm compression: 1/10531 N/uT up to 1 N, 1/377 N/uT beyond.
    The temperature cubic and Hall drift come from the default forward model,
    since no numbers are published for them.
    """
    base = generate_calibration()
    return CalibrationSet(
        temp_poly=base.temp_poly,
        current_min_uA=base.current_min_uA,
        current_max_uA=base.current_max_uA,
        f0_Hz=5000.0,
        dh_slope_Hz_per_mm=-900.0,
        fz_map=PiecewiseLinear(break_x=600.0, break_y=1.0, slope_lo=1 / 600,
                               slope_hi=1 / 200, x_min=0.0, x_max=2200.0),
        tau_map=PiecewiseLinear(break_x=10531.0, break_y=1.0, slope_lo=1 / 10531,
                                slope_hi=1 / 377, x_min=0.0, x_max=10908.0),
        tau_transform="linear",
        m0_grid=((0.0, 1.0), (2.5, 1.0)),
        gamma_T_per_C=base.gamma_T_per_C,
        t_ref_C=base.t_ref_C,
        t_min_C=20.0,
        t_max_C=80.0,
        fz_max_N=9.0,
        tau_max_N=2.0,
        rest_threshold_uT=1.0,
        provenance="published-constants: published slopes, not fitted",
    )


# --------------------------------------------------------------------------
# sweep CSV
# --------------------------------------------------------------------------

SWEEP_COLUMNS = ("channel", "x", "y")


def read_sweep_csv(path) -> SweepData:
    """Read `channel,x,y[,level]` rows; tangential rows carry level = dh_mm."""
    sweeps = SweepData()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaMismatch(list(SWEEP_COLUMNS), "empty sweep file") from None
        missing = [c for c in SWEEP_COLUMNS if c not in header]
        if missing:
            raise SchemaMismatch(missing)
        idx = {name: header.index(name) for name in header}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                channel = row[idx["channel"]].strip()
                x, y = float(row[idx["x"]]), float(row[idx["y"]])
            except (IndexError, ValueError) as exc:
                raise ParseError(str(exc), lineno) from None
            if channel == "tangential":
                if "level" not in idx or not row[idx["level"]].strip():
                    raise ParseError("tangential row without level", lineno)
                level = float(row[idx["level"]])
                sweeps.tangential.setdefault(level, []).append((x, y))
            elif channel in SWEEP_CHANNELS:
                getattr(sweeps, channel).append((x, y))
            else:
                raise ParseError(f"unknown channel {channel!r}", lineno)
    return sweeps


def write_sweep_csv(sweeps: SweepData, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*SWEEP_COLUMNS, "level"])
        for channel in ("temp", "normal_freq", "normal_force"):
            for x, y in getattr(sweeps, channel):
                w.writerow([channel, repr(float(x)), repr(float(y)), ""])
        for level, rows in sweeps.tangential.items():
            for x, y in rows:
                w.writerow(["tangential", repr(float(x)), repr(float(y)), repr(float(level))])
        for x, y in sweeps.drift:
            w.writerow(["drift", repr(float(x)), repr(float(y)), ""])
