"""Command-line front end.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import acceptance
from .calibration import (generate_calibration, fit_calibration, load_calibration,
                          published_constants_calibration, read_sweep_csv, save_calibration,
                          synthesize_sweeps, write_sweep_csv, CalibrationGridSpec)
from .decoding import decode
from .errors import TactwinError
from .physics import SensorParams, load_params
from .scenarios import (SCENARIO_KINDS, Trace, TraceRow, gen_scenario, run_scenario,
                        scenario_grip_config, scenario_params)
from .traceio import read_raw, write_trace
from .validation import validate_calibration

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _params(args, kind: str | None = None) -> SensorParams:
    params = load_params(args.params) if args.params else None
    if params is None:
        params = scenario_params(kind) if kind else SensorParams()
    if args.seed is not None:
        params = dataclasses.replace(params, rng_seed=args.seed)
    return params


def _calibration(args, params):
    return load_calibration(args.cal) if args.cal else generate_calibration(params)


def _emit_trace(trace: Trace, out):
    write_trace(trace, out or sys.stdout)


def cmd_simulate(args) -> int:
    params = _params(args, args.scenario)
    cal = _calibration(args, params)
    grip = None if args.no_grip else scenario_grip_config(args.scenario)
    trace = run_scenario(gen_scenario(args.scenario), params, cal, grip)
    _emit_trace(trace, args.out)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if args.published_constants:
        cal = published_constants_calibration()
    else:
        params = _params(args)
        if args.sweep:
            sweeps = read_sweep_csv(args.sweep)
            cal = fit_calibration(sweeps, t_ref_C=args.t_ref, provenance=f"sweep {args.sweep}")
        else:
            if args.write_sweep:
                write_sweep_csv(synthesize_sweeps(params, CalibrationGridSpec()), args.write_sweep)
            cal = generate_calibration(params)
    if args.out:
        save_calibration(cal, args.out)
    else:
        sys.stdout.write(cal.to_json())
    return EXIT_OK


def cmd_decode(args) -> int:
    cal = load_calibration(args.cal)
    trace = Trace(name="decode")
    for raw in read_raw(args.input):
        trace.rows.append(TraceRow(raw.t_s, None, raw, decode(raw, cal)))
    _emit_trace(trace, args.out)
    return EXIT_OK


_REPLAY_CHECKS = {
    "static_fig4a": acceptance.check_static,
    "jamming_fig4c": acceptance.check_jamming,
    "tea_fig6": acceptance.check_handover,
}


def cmd_replay(args) -> int:
    params = _params(args, args.scenario)
    cal = _calibration(args, params)
    trace = run_scenario(gen_scenario(args.scenario), params, cal,
                         scenario_grip_config(args.scenario))
    if args.out:
        write_trace(trace, args.out)
    check = _REPLAY_CHECKS.get(args.scenario)
    if check is None:
        print(f"{args.scenario}: {len(trace)} samples, no assertions defined")
        return EXIT_OK
    result = check(trace)
    print(result.line())
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_validate(args) -> int:
    if args.criterion is not None or args.all:
        numbers = sorted(acceptance.CRITERIA) if args.all else [args.criterion]
        results = []
        for n in numbers:
            res = acceptance.CRITERIA[n]()
            print(res.line())
            results.append(res)
        return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL
    params = _params(args)
    cal = _calibration(args, params)
    report = validate_calibration(cal, params)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tactwin",
                                     description="Tactile sensor twin: simulate, calibrate, "
                                                 "decode, replay, validate.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=False, cal=True):
        p.add_argument("--params", help="sensor parameter file (key = value lines)")
        if cal:
            p.add_argument("--cal", help="calibration bundle (JSON)")
        p.add_argument("--seed", type=int, help="noise seed (overrides the params file)")
        p.add_argument("--out", help="output file (default: stdout)")
        if scenario:
            p.add_argument("--scenario", required=True, choices=SCENARIO_KINDS)

    p = sub.add_parser("simulate", help="run a scenario and write its trace CSV")
    common(p, scenario=True)
    p.add_argument("--no-grip", action="store_true", help="open loop, no grip controller")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit a calibration bundle")
    common(p, cal=False)
    p.add_argument("--sweep", help="fit from a channel,x,y[,level] sweep CSV")
    p.add_argument("--t-ref", type=float, default=25.0, help="reference temperature of the sweep")
    p.add_argument("--write-sweep", help="also write the synthetic sweep CSV here")
    p.add_argument("--published-constants", action="store_true",
                   help="emit the published-constants profile instead of fitting")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("decode", help="decode raw samples from CSV")
    p.add_argument("--cal", required=True, help="calibration bundle (JSON)")
    p.add_argument("--in", dest="input", required=True, help="CSV with raw sample columns")
    p.add_argument("--out", help="output trace CSV (default: stdout)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("replay", help="run a scenario and assert its published behaviour")
    common(p, scenario=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("validate", help="held-out calibration audit or acceptance criteria")
    common(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--criterion", type=int, choices=sorted(acceptance.CRITERIA))
    group.add_argument("--all", action="store_true", help="run every acceptance criterion")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, TactwinError) as exc:
        print(f"tactwin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
