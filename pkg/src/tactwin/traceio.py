"""Trace CSV reading and writing.

Numbers are written with 9 significant digits, so a file written by this
module reads back and re-writes byte for byte.
"""

from __future__ import annotations

import csv
import math

from .control import GripCommand, HandoverEvent, Phase
from .decoding import DecodeFlag, DecodedState
from .errors import InvalidInput, ParseError, SchemaMismatch
from .physics import RawSample, TactileState
from .scenarios import Trace, TraceRow

TRACE_COLUMNS = (
    "t_s", "gt_temp_c", "gt_fz_n", "gt_fx_n", "gt_fy_n",
    "current_ua", "freq_hz", "bx_ut", "by_ut", "bz_ut",
    "dec_temp_c", "dec_fz_n", "dec_fx_n", "dec_fy_n", "dec_theta_deg",
    "grip_cmd_n", "margin_n", "phase", "event",
)
RAW_COLUMNS = ("t_s", "current_ua", "freq_hz", "bx_ut", "by_ut", "bz_ut")


def fmt(x: float | None) -> str:
    return "" if x is None else format(x, ".9g")


def _event_cell(event: HandoverEvent | None) -> str:
    if event is None:
        return ""
    return f"handover;latency_s={fmt(event.latency_s)};confidence={fmt(event.confidence)}"


def _parse_event(cell: str, t_s: float) -> HandoverEvent | None:
    if not cell:
        return None
    kind, *fields = cell.split(";")
    if kind != "handover":
        raise ValueError(f"unknown event {kind!r}")
    values = dict(f.split("=", 1) for f in fields)
    return HandoverEvent(t_s, float(values["latency_s"]), float(values["confidence"]))


def row_cells(row: TraceRow) -> list[str]:
    gt, raw, dec, cmd = row.truth, row.raw, row.decoded, row.command
    cells = [fmt(row.t_s)]
    cells += [fmt(gt.temperature_C), fmt(gt.fz_N), fmt(gt.fx_N), fmt(gt.fy_N)] \
        if gt is not None else [""] * 4
    cells += [fmt(raw.current_uA), fmt(raw.freq_Hz), fmt(raw.bx_uT), fmt(raw.by_uT),
              fmt(raw.bz_uT)]
    if dec is not None:
        cells += [fmt(dec.temperature_C), fmt(dec.fz_N), fmt(dec.fx_N), fmt(dec.fy_N),
                  fmt(dec.theta_deg)]
    else:
        cells += [""] * 5
    cells += [fmt(cmd.fz_cmd_N), fmt(cmd.margin_N), cmd.phase.value] if cmd is not None \
        else [""] * 3
    cells.append(_event_cell(row.event))
    return cells


def write_trace(trace: Trace, dest) -> None:
    """Write to a path, or to an open text stream."""
    if hasattr(dest, "write"):
        _write_rows(trace, dest)
        return
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        _write_rows(trace, fh)


def _write_rows(trace, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for row in trace.rows:
        w.writerow(row_cells(row))


def _header(reader, required) -> dict[str, int]:
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaMismatch(list(required), "empty file") from None
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaMismatch(missing)
    return {name: i for i, name in enumerate(header)}


def _num(cells, idx, name, optional=False):
    text = cells[idx[name]].strip()
    if not text:
        if optional:
            return None
        raise ValueError(f"{name} is empty")
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{name} is not finite")
    return value


def _parse_row(cells, idx) -> TraceRow:
    if len(cells) < len(idx):
        raise ValueError(f"expected {len(idx)} cells, got {len(cells)}")
    t = _num(cells, idx, "t_s")
    raw = RawSample(t, *(_num(cells, idx, c) for c in RAW_COLUMNS[1:]))
    gt_vals = [_num(cells, idx, c, optional=True)
               for c in ("gt_temp_c", "gt_fz_n", "gt_fx_n", "gt_fy_n")]
    truth = TactileState(*gt_vals) if None not in gt_vals else None

    dec_vals = [_num(cells, idx, c, optional=True)
                for c in ("dec_temp_c", "dec_fz_n", "dec_fx_n", "dec_fy_n")]
    decoded = None
    if None not in dec_vals:
        theta = _num(cells, idx, "dec_theta_deg", optional=True)
        temp, fz, fx, fy = dec_vals
        flags = DecodeFlag.TANGENTIAL_AT_REST if theta is None else DecodeFlag.NONE
        decoded = DecodedState(temp, fz, math.hypot(fx, fy), theta, fx, fy, flags, t_s=t)

    cmd_n = _num(cells, idx, "grip_cmd_n", optional=True)
    command = None
    if cmd_n is not None:
        command = GripCommand(cmd_n, _num(cells, idx, "margin_n"),
                              Phase(cells[idx["phase"]].strip()))
    return TraceRow(t, truth, raw, decoded, command,
                    _parse_event(cells[idx["event"]].strip(), t))


def read_trace(path) -> Trace:
    trace = Trace()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        idx = _header(reader, TRACE_COLUMNS)
        for lineno, cells in enumerate(reader, start=2):
            try:
                trace.rows.append(_parse_row(cells, idx))
            except (ValueError, KeyError, InvalidInput) as exc:
                raise ParseError(str(exc), lineno) from None
    return trace


def read_raw(path) -> list[RawSample]:
    """Raw samples from any CSV carrying the six raw columns (a trace file works too)."""
    samples = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        idx = _header(reader, RAW_COLUMNS)
        for lineno, cells in enumerate(reader, start=2):
            try:
                samples.append(RawSample(*(_num(cells, idx, c) for c in RAW_COLUMNS)))
            except (ValueError, IndexError, InvalidInput) as exc:
                raise ParseError(str(exc), lineno) from None
    return samples
