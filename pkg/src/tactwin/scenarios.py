"""
Scripted ground-truth trajectories and the forward -> decode -> control loop.

Built-in kinds
--------------
static_fig4a    100 g on the pad at 50 s, 0.5 N along x at 100 s, 0.5 N along
                y at 150 s, ambient ramping 20 -> 80 C over 200 s.
jamming_fig4c   hold (Fz 5.52, Fy 0.80) for 3 s, a 0.5 Hz pull spanning
                Fy 0.08..1.56 and Fx -0.62..1.24 for 4 s, then 3 s with only
                0.80 N along x.
pva_fig5        heat a beaker to 75 C, shake at 1 Hz while it cools to 60 C,
                reheat, shake again.
tea_fig6        grasp, three pouring stages lifting the gravity-axis load
                1.4 -> 2.9 N and the cup 18.5 -> 25.7 -> 40 -> 55 C, delivery,
                then the receiver takes the weight (Fy 2.9 -> 0.3 N in 0.3 s).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import physics
from .calibration import CalibrationSet
from .control import GripCommand, GripConfig, GripController, HandoverEvent
from .decoding import DecodedState, decode
from .errors import InvalidInput, RangeExceeded, UnknownScenario
from .physics import RawSample, SensorParams, TactileState

INTERPOLATIONS = ("hold", "linear", "sinusoid")
SCENARIO_KINDS = ("static_fig4a", "jamming_fig4c", "pva_fig5", "tea_fig6")

GRAM_FORCE_N = 9.81e-3


@dataclass(frozen=True)
class Segment:
    """One stretch of a trajectory.

    hold      the start state throughout
    linear    start -> end
    sinusoid  force components oscillate between the start and end values
              (start at mid-range, rising first); temperature ramps linearly
    """

    duration_s: float
    start: TactileState
    end: TactileState | None = None
    interpolation: str = "hold"
    freq_Hz: float = 0.0

    def __post_init__(self):
        if not self.duration_s > 0:
            raise InvalidInput("segment duration must be positive")
        if self.interpolation not in INTERPOLATIONS:
            raise InvalidInput(f"unknown interpolation {self.interpolation!r}")
        if self.interpolation != "hold" and self.end is None:
            raise InvalidInput(f"{self.interpolation} segment needs an end state")
        if self.interpolation == "sinusoid" and not self.freq_Hz > 0:
            raise InvalidInput("sinusoid segment needs a positive frequency")

    def at(self, tau_s: float) -> TactileState:
        s, e = self.start, self.end
        if self.interpolation == "hold":
            return s
        w = min(max(tau_s / self.duration_s, 0.0), 1.0)
        temp = s.temperature_C + w * (e.temperature_C - s.temperature_C)
        if self.interpolation == "linear":
            k = w
        else:
            k = 0.5 + 0.5 * math.sin(2 * math.pi * self.freq_Hz * tau_s)

        def lerp(a, b):
            return a + k * (b - a)

        return TactileState(temp, max(0.0, lerp(s.fz_N, e.fz_N)), lerp(s.fx_N, e.fx_N),
                            lerp(s.fy_N, e.fy_N))


@dataclass(frozen=True)
class Scenario:
    name: str
    sample_rate_Hz: float
    segments: tuple[Segment, ...]
    gravity_axis: str = "y"

    def __post_init__(self):
        if not self.segments:
            raise InvalidInput("scenario needs at least one segment")
        if not self.sample_rate_Hz > 0:
            raise InvalidInput("sample rate must be positive")

    @property
    def duration_s(self) -> float:
        return float(sum(seg.duration_s for seg in self.segments))

    def times(self) -> np.ndarray:
        n = int(round(self.duration_s * self.sample_rate_Hz)) + 1
        return np.arange(n) / self.sample_rate_Hz

    def state_at(self, t_s: float) -> TactileState:
        t0 = 0.0
        for seg in self.segments:
            if t_s < t0 + seg.duration_s:
                return seg.at(t_s - t0)
            t0 += seg.duration_s
        last = self.segments[-1]
        return last.at(last.duration_s)

    def segment_starts(self) -> list[float]:
        return list(np.cumsum([0.0] + [s.duration_s for s in self.segments[:-1]]))


def _ramp_segments(durations, states, temps):
    """Hold-force segments with a piecewise temperature ramp across them."""
    segs = []
    for i, (d, st) in enumerate(zip(durations, states)):
        a = dataclasses.replace(st, temperature_C=temps[i])
        b = dataclasses.replace(st, temperature_C=temps[i + 1])
        segs.append(Segment(d, a, b, "linear"))
    return segs


def _static_fig4a(temperature_ramp=True):
    w = 100 * GRAM_FORCE_N
    loads = [TactileState(20.0), TactileState(20.0, w), TactileState(20.0, w, 0.5, 0.0),
             TactileState(20.0, w, 0.0, 0.5)]
    temps = [20.0, 35.0, 50.0, 65.0, 80.0] if temperature_ramp else [20.0] * 5
    return _ramp_segments([50.0, 50.0, 50.0, 50.0], loads, temps)


def _jamming_fig4c():
    hold = TactileState(25.0, 5.52, 0.0, 0.80)
    lo = TactileState(25.0, 5.52, -0.62, 0.08)
    hi = TactileState(25.0, 5.52, 1.24, 1.56)
    recover = TactileState(25.0, 5.52, 0.80, 0.0)
    return [Segment(3.0, hold), Segment(4.0, lo, hi, "sinusoid", 0.5), Segment(3.0, recover)]


def _pva_fig5():
    def st(temp, fx=0.0):
        return TactileState(temp, 6.0, fx, 1.0)
    return [
        Segment(10.0, st(20.0)),
        Segment(210.0, st(20.0), st(75.0), "linear"),
        Segment(240.0, st(75.0, -0.4), st(60.0, 0.4), "sinusoid", 1.0),
        Segment(120.0, st(60.0), st(75.0), "linear"),
        Segment(240.0, st(75.0, -0.4), st(60.0, 0.4), "sinusoid", 1.0),
    ]


def _tea_fig6():
    def st(temp, fy):
        return TactileState(temp, 7.7, 0.0, fy)
    return [
        Segment(35.0, st(18.5, 1.4)),                          # grasp and transport
        Segment(10.0, st(18.5, 1.4), st(25.7, 2.9), "linear"),  # high flow
        Segment(18.0, st(25.7, 2.9), st(40.0, 2.9), "linear"),  # low flow
        Segment(50.0, st(40.0, 2.9), st(55.0, 2.9), "linear"),  # micro flow
        Segment(24.0, st(55.0, 2.9)),                           # delivery
        Segment(0.3, st(55.0, 2.9), st(55.0, 0.3), "linear"),   # receiver takes weight
        Segment(1.7, st(55.0, 0.3)),
    ]


_OVERRIDES = {"sample_rate_Hz", "temperature_ramp", "gravity_axis"}


def gen_scenario(kind: str, overrides: dict | None = None) -> Scenario:
    """Build one of the scripted trajectories.

    Recognised overrides: sample_rate_Hz, gravity_axis, and temperature_ramp
    (static_fig4a only; False keeps the ambient at 20 C).
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - _OVERRIDES
    if unknown:
        raise InvalidInput(f"unknown overrides: {sorted(unknown)}")
    if kind == "static_fig4a":
        segments = _static_fig4a(overrides.get("temperature_ramp", True))
    elif "temperature_ramp" in overrides:
        raise InvalidInput("temperature_ramp only applies to static_fig4a")
    elif kind == "jamming_fig4c":
        segments = _jamming_fig4c()
    elif kind == "pva_fig5":
        segments = _pva_fig5()
    elif kind == "tea_fig6":
        segments = _tea_fig6()
    else:
        raise UnknownScenario(f"unknown scenario {kind!r}; choose from {SCENARIO_KINDS}")
    return Scenario(name=kind, sample_rate_Hz=float(overrides.get("sample_rate_Hz", 50.0)),
                    segments=tuple(segments), gravity_axis=overrides.get("gravity_axis", "y"))


# Gripper-mounted units use a stiffer elastomer so demo loads of 2-3 N stay
# on the rising half of the sine.
GRIPPER_SHEAR_STIFFNESS_N_PER_MM = 2.0


def scenario_params(kind: str, base: SensorParams | None = None) -> SensorParams:
    """Sensor parameters suited to a scenario's load range."""
    base = base or SensorParams()
    if kind == "static_fig4a":
        return base
    if kind in ("jamming_fig4c", "pva_fig5", "tea_fig6"):
        hb = base.halbach.with_shear_stiffness(GRIPPER_SHEAR_STIFFNESS_N_PER_MM)
        return dataclasses.replace(base, halbach=hb)
    raise UnknownScenario(f"unknown scenario {kind!r}")


def scenario_grip_config(kind: str) -> GripConfig | None:
    if kind == "jamming_fig4c":
        return GripConfig(handover_enabled=False)
    if kind == "tea_fig6":
        return GripConfig(fz_min_N=7.7, fz_max_N=9.0)
    if kind in ("static_fig4a", "pva_fig5"):
        return None
    raise UnknownScenario(f"unknown scenario {kind!r}")


@dataclass(frozen=True)
class TraceRow:
    t_s: float
    truth: TactileState
    raw: RawSample
    decoded: DecodedState | None
    command: GripCommand | None = None
    event: HandoverEvent | None = None


@dataclass
class Trace:
    rows: list[TraceRow] = field(default_factory=list)
    name: str = ""

    def __len__(self):
        return len(self.rows)

    @property
    def events(self) -> list[HandoverEvent]:
        return [r.event for r in self.rows if r.event is not None]

    def column(self, getter) -> np.ndarray:
        return np.array([getter(r) for r in self.rows], dtype=float)


def run_scenario(scn: Scenario, params: SensorParams, cal: CalibrationSet,
                 grip: GripConfig | None = None) -> Trace:
    """Sample the scenario, synthesize raw readings, decode, and optionally control.

    With a grip config the loop is closed: the normal force applied at each
    sample is the command from the previous sample (ideal actuator), starting
    from the scenario's own normal force.
    """
    if grip is not None and grip.gravity_axis != scn.gravity_axis:
        grip = dataclasses.replace(grip, gravity_axis=scn.gravity_axis)
    controller = None
    if grip is not None:
        controller = GripController(grip, initial_fz_N=scn.state_at(0.0).fz_N)
    trace = Trace(name=scn.name)
    for i, t in enumerate(scn.times()):
        t = float(t)
        truth = scn.state_at(t)
        if controller is not None:
            truth = dataclasses.replace(truth, fz_N=controller.command.fz_cmd_N)
        try:
            raw = physics.forward_sample(truth, params, t)
            dec = decode(raw, cal)
        except RangeExceeded as exc:
            raise RangeExceeded(str(exc), sample_index=i) from exc
        command = event = None
        if controller is not None:
            command, event = controller.step(dec)
        trace.rows.append(TraceRow(t, truth, raw, dec, command, event))
    return trace
