"""
End-to-end acceptance checks.

Each `criterion_N` returns a `CriterionResult`; `run_all` runs the lot. The
same functions back `tests/test_acceptance.py` and `tactwin validate
--criterion N`.
"""

from __future__ import annotations

import dataclasses
import math
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import physics
from .calibration import CalibrationSet, generate_calibration, published_constants_calibration
from .decoding import decode, decode_normal, decode_tangential
from .piecewise import fit_piecewise_linear
from .physics import SensorParams, TactileState
from .scenarios import (Trace, gen_scenario, run_scenario, scenario_grip_config,
                        scenario_params)
from .traceio import write_trace

# Tolerances, all fixed up front.
TEMP_TOL_C = 0.5
FZ_TOL_LOW_N = 0.01          # Fz <= 1 N
FZ_TOL_HIGH_N = 0.03         # Fz > 1 N
TAU_TOL_N = 0.01             # F_tau <= 1 N
THETA_TOL_DEG = 2.0          # F_tau >= 0.05 N
ROUND_TRIP_BUDGET_S = 5.0
LOAD_RATIO_TOL = 0.01
THERMAL_FZ_TOL = 0.03
PUBLISHED_FORCE_TOL_N = 1e-6
PUBLISHED_ANCHOR_N = 7.2
PUBLISHED_ANCHOR_TOL = 0.03
ORACLE_SSE_FACTOR = 1.01
EXACT_PARAM_TOL = 1e-9
GRIP_PEAK_N = 8.28
GRIP_INITIAL_N = 5.52
GRIP_REL_TOL = 0.02
RECOVERY_WINDOW_S = 3.0
HANDOVER_LATENCY_S = 0.42
STATIC_TEMP_TOL_C = 0.8


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}: {self.detail}"


def _angle_diff_deg(a, b):
    return (a - b + 180.0) % 360.0 - 180.0


# ---------------------------------------------------------------------------
# 1. round trip
# ---------------------------------------------------------------------------

def criterion_1(n: int = 1000, seed: int = 0) -> CriterionResult:
    start = time.perf_counter()
    params = SensorParams()
    cal = generate_calibration(params)
    rng = np.random.default_rng(seed)
    worst = dict(temp=0.0, fz_low=0.0, fz_high=0.0, tau=0.0, theta=0.0)
    for _ in range(n):
        temp = rng.uniform(20.0, 80.0)
        fz = rng.uniform(0.0, 7.0)
        tau = rng.uniform(0.0, 1.25)
        th = rng.uniform(-math.pi, math.pi)
        d = decode(physics.forward_sample(
            TactileState(temp, fz, tau * math.cos(th), tau * math.sin(th)), params), cal)
        worst["temp"] = max(worst["temp"], abs(d.temperature_C - temp))
        key = "fz_low" if fz <= 1.0 else "fz_high"
        worst[key] = max(worst[key], abs(d.fz_N - fz))
        if tau <= 1.0:
            worst["tau"] = max(worst["tau"], abs(d.f_tau_N - tau))
        if tau >= 0.05:
            err = 180.0 if d.theta_deg is None else abs(_angle_diff_deg(d.theta_deg,
                                                                        math.degrees(th)))
            worst["theta"] = max(worst["theta"], err)
    elapsed = time.perf_counter() - start
    ok = (worst["temp"] <= TEMP_TOL_C and worst["fz_low"] <= FZ_TOL_LOW_N
          and worst["fz_high"] <= FZ_TOL_HIGH_N and worst["tau"] <= TAU_TOL_N
          and worst["theta"] <= THETA_TOL_DEG and elapsed < ROUND_TRIP_BUDGET_S)
    detail = (f"{n} states, max |dT|={worst['temp']:.3f} C, |dFz|={worst['fz_low']:.2e}/"
              f"{worst['fz_high']:.2e} N, |dFtau|={worst['tau']:.2e} N, "
              f"|dtheta|={worst['theta']:.2e} deg, {elapsed:.2f} s")
    return CriterionResult(1, "round-trip decoupling sweep", ok, detail)


# ---------------------------------------------------------------------------
# 2. load insensitivity of temperature
# ---------------------------------------------------------------------------

def criterion_2() -> CriterionResult:
    worst = {}
    for leak in (0.0, 0.002):
        # F_tau = 2 N needs the stiffer gripper elastomer to stay in range
        base = scenario_params("jamming_fig4c")
        params = dataclasses.replace(
            base, iongel=dataclasses.replace(base.iongel, force_leak=leak))
        cal = generate_calibration(params)
        dev = 0.0
        for temp in np.linspace(20.0, 80.0, 61):
            free = decode(physics.forward_sample(TactileState(temp), params), cal)
            loaded = decode(physics.forward_sample(TactileState(temp, 7.0, 2.0, 0.0), params),
                            cal)
            dev = max(dev, abs(loaded.temperature_C / free.temperature_C - 1.0))
        worst[leak] = dev
    ok = all(v <= LOAD_RATIO_TOL for v in worst.values())
    detail = ", ".join(f"leak={k:g}: max |ratio-1|={v:.4f}" for k, v in worst.items())
    return CriterionResult(2, "load insensitivity of temperature", ok, detail)


# ---------------------------------------------------------------------------
# 3. thermal invariance of Fz
# ---------------------------------------------------------------------------

def criterion_3() -> CriterionResult:
    params = SensorParams()
    cal = generate_calibration(params)
    worst = 0.0
    for fz in np.linspace(0.25, 7.0, 28):
        cold = decode(physics.forward_sample(TactileState(20.0, fz), params), cal).fz_N
        hot = decode(physics.forward_sample(TactileState(80.0, fz), params), cal).fz_N
        worst = max(worst, abs(hot - cold) / cold)
    ok = worst <= THERMAL_FZ_TOL
    return CriterionResult(3, "thermal invariance of normal force", ok,
                           f"max |Fz(80C)-Fz(20C)|/Fz = {worst:.2e}")


# ---------------------------------------------------------------------------
# 4. published constants
# ---------------------------------------------------------------------------

def criterion_4(cal: CalibrationSet | None = None) -> CriterionResult:
    cal = cal or published_constants_calibration()
    fz_600 = decode_normal(cal.f0_Hz - 600.0, cal).fz_N
    fz_2mm, dh_2mm, _ = decode_normal(cal.f0_Hz - 900.0 * 2.0, cal)
    tau = decode_tangential(10531.0, 0.0, fz_2mm, cal).f_tau_N
    anchor_err = abs(fz_2mm - PUBLISHED_ANCHOR_N) / PUBLISHED_ANCHOR_N
    ok = (abs(fz_600 - 1.0) <= PUBLISHED_FORCE_TOL_N and abs(tau - 1.0) <= PUBLISHED_FORCE_TOL_N
          and abs(dh_2mm - 2.0) <= 1e-9 and anchor_err <= PUBLISHED_ANCHOR_TOL)
    detail = (f"f0-600 Hz -> {fz_600:.4f} N; M_r=10531 uT @ dH={dh_2mm:.3f} mm -> "
              f"{tau:.4f} N; dH=2 mm -> {fz_2mm:.3f} N vs 7.2 N ({anchor_err:.1%})")
    return CriterionResult(4, "published-constant cross-checks", ok, detail)


# ---------------------------------------------------------------------------
# 5. breakpoint search vs brute force
# ---------------------------------------------------------------------------

def brute_force_sse(x, y, refine: int = 10) -> float:
    """Minimum continuous two-segment SSE over a fine grid of breakpoints.

    Candidates are spaced `refine` times finer than the data between the
    third and third-last x, each side keeping at least three points. Each
    candidate is solved with a ramp basis [1, x, max(x - b, 0)].
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    cands = [x[2]]
    for a, b in zip(x[2:-3], x[3:-2]):
        cands.extend(a + (b - a) * np.arange(1, refine + 1) / refine)
    best = np.inf
    for b in cands:
        A = np.column_stack([np.ones_like(x), x, np.maximum(x - b, 0.0)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        r = y - A @ coef
        best = min(best, float(r @ r))
    return best


def random_piecewise_instance(rng, noisy=True):
    n = int(rng.integers(8, 41))
    x = np.sort(rng.uniform(0.0, 10.0, n))
    x = x[np.concatenate([[True], np.diff(x) > 1e-6])]
    bx = rng.uniform(x[2], x[-3])
    s_lo, s_hi = rng.uniform(-3, 3, 2)
    y0 = rng.uniform(-5, 5)
    y = y0 + np.where(x < bx, s_lo * (x - bx), s_hi * (x - bx))
    if noisy:
        y = y + rng.normal(0.0, 0.05 * (np.ptp(y) + 1e-3), len(x))
    return x, y, (bx, y0, s_lo, s_hi)


def criterion_5(n_instances: int = 50, seed: int = 5) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst_ratio = 0.0
    for _ in range(n_instances):
        x, y, _ = random_piecewise_instance(rng)
        fit = fit_piecewise_linear(np.column_stack([x, y]))
        ratio = fit.sse(x, y) / brute_force_sse(x, y)
        worst_ratio = max(worst_ratio, ratio)
    worst_param = 0.0
    for _ in range(n_instances):
        x, y, (bx, y0, s_lo, s_hi) = random_piecewise_instance(rng, noisy=False)
        if abs(s_lo - s_hi) < 0.1:
            continue
        fit = fit_piecewise_linear(np.column_stack([x, y]))
        worst_param = max(worst_param, abs(fit.break_x - bx), abs(fit.break_y - y0),
                          abs(fit.slope_lo - s_lo), abs(fit.slope_hi - s_hi))
    ok = worst_ratio <= ORACLE_SSE_FACTOR and worst_param <= EXACT_PARAM_TOL
    return CriterionResult(5, "breakpoint search vs brute-force oracle", ok,
                           f"max SSE ratio {worst_ratio:.6f} over {n_instances} noisy "
                           f"instances; exact-recovery max param error {worst_param:.1e}")


# ---------------------------------------------------------------------------
# 6-8. scenario replays
# ---------------------------------------------------------------------------

def replay(kind: str, params: SensorParams | None = None,
           cal: CalibrationSet | None = None) -> Trace:
    params = params or scenario_params(kind)
    cal = cal or generate_calibration(params)
    return run_scenario(gen_scenario(kind), params, cal, scenario_grip_config(kind))


def check_jamming(trace: Trace, mu: float | None = None) -> CriterionResult:
    mu = scenario_grip_config("jamming_fig4c").mu if mu is None else mu
    t = trace.column(lambda r: r.t_s)
    cmd = trace.column(lambda r: r.command.fz_cmd_N)
    tau = trace.column(lambda r: r.truth.f_tau_N)
    cone = float(np.min(mu * cmd - tau))
    peak = float(cmd.max())
    peak_err = abs(peak - GRIP_PEAK_N) / GRIP_PEAK_N
    after = t >= 7.0
    settled = np.abs(cmd[after] / GRIP_INITIAL_N - 1.0) <= GRIP_REL_TOL
    if settled.any() and settled[np.argmax(settled):].all():
        settle_s = float(t[after][np.argmax(settled)] - 7.0)
    else:
        settle_s = math.inf
    ok = cone >= 0 and peak_err <= GRIP_REL_TOL and settle_s <= RECOVERY_WINDOW_S
    detail = (f"min mu*Fz_cmd - Ftau = {cone:.3f} N, peak command {peak:.3f} N "
              f"({peak_err:.2%} from 8.28), settled to 5.52 N +/- 2% {settle_s:.2f} s "
              "after disturbance")
    return CriterionResult(6, "adaptive grip replay", ok, detail)


def check_handover(trace: Trace, handover_start_s: float | None = None) -> CriterionResult:
    if handover_start_s is None:
        handover_start_s = gen_scenario("tea_fig6").segment_starts()[-2]
    events = trace.events
    early = [e for e in events if e.t_s < handover_start_s]
    latency = events[0].latency_s if len(events) == 1 else math.nan
    ok = len(events) == 1 and not early and latency <= HANDOVER_LATENCY_S
    detail = (f"{len(events)} event(s), {len(early)} before the handover, "
              f"latency {latency:.3f} s")
    return CriterionResult(7, "handover replay", ok, detail)


def check_static(trace: Trace) -> CriterionResult:
    err = trace.column(lambda r: abs(r.decoded.temperature_C - r.truth.temperature_C))
    worst = float(err.max())
    return CriterionResult(8, "static replay temperature", worst <= STATIC_TEMP_TOL_C,
                           f"max |dT| = {worst:.3f} C over {len(trace)} samples")


def criterion_6() -> CriterionResult:
    return check_jamming(replay("jamming_fig4c"))


def criterion_7() -> CriterionResult:
    return check_handover(replay("tea_fig6"))


def criterion_8() -> CriterionResult:
    return check_static(replay("static_fig4a"))


# ---------------------------------------------------------------------------
# 9. determinism and serialization
# ---------------------------------------------------------------------------

def _trace_bytes(trace: Trace) -> bytes:
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "trace.csv")
        write_trace(trace, path)
        with open(path, "rb") as fh:
            return fh.read()


def criterion_9(seed: int = 7) -> CriterionResult:
    base = scenario_params("jamming_fig4c")
    noisy = dataclasses.replace(base, noise_current_uA=0.002, noise_freq_Hz=0.5,
                                noise_field_uT=0.5, rng_seed=seed)
    cal = generate_calibration(base)
    first = _trace_bytes(replay("jamming_fig4c", noisy, cal))
    second = _trace_bytes(replay("jamming_fig4c", noisy, cal))
    other = _trace_bytes(replay("jamming_fig4c", dataclasses.replace(noisy, rng_seed=seed + 1),
                                cal))
    text = cal.to_json()
    again = CalibrationSet.from_json(text).to_json()
    params_text = noisy.to_text()
    params_again = SensorParams.from_text(params_text).to_text()
    ok = first == second and first != other and text == again and params_text == params_again
    detail = (f"same seed identical: {first == second}, other seed differs: {first != other}, "
              f"bundle round-trip identical: {text == again}, params round-trip identical: "
              f"{params_text == params_again}")
    return CriterionResult(9, "determinism and serialization", ok, detail)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9,
}


def run_all(out=None) -> list[CriterionResult]:
    results = []
    for number in sorted(CRITERIA):
        res = CRITERIA[number]()
        results.append(res)
        if out is not None:
            print(res.line(), file=out)
    return results
