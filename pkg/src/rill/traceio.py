"""Trace CSV reading and verdict CSV/JSONL/plot-data writing.

Input traces are CSV with a `time` column followed by one column per input
stream.  An empty cell means the input is absent from that event.  Verdict
output mirrors the cycle sequence: one row (or JSON line) per cycle.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from rill.interpreter import Event, Verdict
from rill.lang import (
    BOOL,
    FLOAT64,
    INT64,
    INT64_MAX,
    INT64_MIN,
    STRING,
    Scalar,
    StreamKind,
    TupleType,
    UINT64,
    UINT64_MAX,
    ValueType,
    format_time,
    is_numeric,
    parse_decimal,
)
from rill.mir import MirSpec


@dataclass(frozen=True)
class TraceError(Exception):
    code: str  # T001..T005
    line: int  # 1-based line in the CSV, 0 when about the file as a whole
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.code}: {self.message}"

    def to_json(self) -> dict:
        return {"code": self.code, "line": self.line, "message": self.message}


def _parse_cell(text: str, vt: ValueType):
    """Parse one CSV cell; raises ValueError on malformed content."""
    if vt == BOOL:
        if text == "true":
            return True
        if text == "false":
            return False
        raise ValueError(f"expected true or false, found {text!r}")
    if vt == STRING:
        return text
    if vt == FLOAT64:
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"not a Float64 value: {text!r}") from None
    lo, hi = (INT64_MIN, INT64_MAX) if vt == INT64 else (0, UINT64_MAX)
    try:
        value = int(text, 10)
    except ValueError:
        raise ValueError(f"not an integer: {text!r}") from None
    if not lo <= value <= hi:
        raise ValueError(f"{value} is out of range for {vt.render()}")
    return value


def parse_trace(text: str, mir: MirSpec) -> tuple[list[Event], TraceError | None]:
    """Parse a CSV trace; stops at the first malformed row.

    Returns the events read so far and the error, if any.
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0]:
        return [], TraceError("T001", 0, "empty trace: expected a CSV header")
    header = [cell.strip() for cell in rows[0]]
    if header[0] != "time":
        return [], TraceError(
            "T001", 1, f"first column must be 'time', found {header[0]!r}"
        )
    columns: list[tuple[int, ValueType]] = []  # (input index, type) per column
    seen: set[str] = set()
    for name in header[1:]:
        if name == "time" or name not in mir.event_layout:
            return [], TraceError("T001", 1, f"unknown column {name!r}")
        if name in seen:
            return [], TraceError("T001", 1, f"duplicate column {name!r}")
        seen.add(name)
        idx = mir.event_layout[name]
        vt = mir.streams[list(mir.streams)[idx]].value_type
        if isinstance(vt, TupleType):
            return [], TraceError(
                "T002",
                1,
                f"input {name!r} has type {vt.render()}, which has no CSV cell form",
            )
        columns.append((idx, vt))
    missing = [name for name in mir.event_layout if name not in seen]
    if missing:
        return [], TraceError(
            "T002", 1, f"no column for declared input {missing[0]!r}"
        )

    events: list[Event] = []
    last_time = None
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and row[0].strip() == ""):
            continue  # blank line
        if len(row) != len(header):
            return events, TraceError(
                "T003",
                lineno,
                f"expected {len(header)} cells, found {len(row)}",
            )
        try:
            time = parse_decimal(row[0].strip())
        except (ValueError, ArithmeticError):
            return events, TraceError(
                "T003", lineno, f"column 'time': invalid timestamp {row[0].strip()!r}"
            )
        if last_time is not None and time < last_time:
            return events, TraceError(
                "T004",
                lineno,
                f"timestamp {format_time(time)} is earlier than the previous "
                f"row ({format_time(last_time)})",
            )
        last_time = time
        values: dict[int, object] = {}
        for col, ((idx, vt), cell) in enumerate(zip(columns, row[1:]), start=1):
            if vt != STRING:
                cell = cell.strip()
            if cell == "":
                continue  # absent
            try:
                values[idx] = _parse_cell(cell, vt)
            except ValueError as err:
                return events, TraceError(
                    "T003", lineno, f"column {header[col]!r}: {err}"
                )
        if not values:
            return events, TraceError(
                "T005", lineno, "row carries no input values"
            )
        events.append(Event(time, values))
    return events, None


# ---------------------------------------------------------------------------
# Verdict rendering


def render_value(value) -> str:
    """Plain-text form of a stream value, as used in CSV cells and the REPL."""
    if value is None:
        return ""
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, tuple):
        return "(" + ", ".join(render_value(v) for v in value) + ")"
    return repr(value) if isinstance(value, float) else str(value)


def json_value(value):
    """JSON-safe form: non-finite floats become strings, tuples arrays."""
    if isinstance(value, float):
        if math.isnan(value):
            return "NaN"
        if math.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        return value
    if isinstance(value, tuple):
        return [json_value(v) for v in value]
    return value


def _value_columns(mir: MirSpec):
    return [sid for sid in mir.streams if sid.kind is not StreamKind.TRIGGER]


def write_verdicts_csv(mir: MirSpec, verdicts: list[Verdict]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    value_cols = _value_columns(mir)
    writer.writerow(
        ["time", "kind"]
        + [mir.streams[sid].name for sid in value_cols]
        + [f"Trigger {t.index}" for t in mir.triggers]
    )
    for v in verdicts:
        fired = dict(v.fired)
        writer.writerow(
            [format_time(v.time), v.kind]
            + [
                render_value(v.values[sid]) if sid in v.values else ""
                for sid in value_cols
            ]
            + [fired.get(t.index, "") for t in mir.triggers]
        )
    return out.getvalue()


def verdict_json(mir: MirSpec, verdict: Verdict) -> dict:
    return {
        "time": format_time(verdict.time),
        "kind": verdict.kind,
        "values": {
            mir.streams[sid].name: json_value(value)
            for sid, value in verdict.values.items()
        },
        "fired": [
            {"index": index, "message": message} for index, message in verdict.fired
        ],
    }


def write_verdicts_jsonl(mir: MirSpec, verdicts: list[Verdict]) -> str:
    lines = [
        json.dumps(verdict_json(mir, v), separators=(",", ":"), ensure_ascii=False)
        for v in verdicts
    ]
    return "".join(line + "\n" for line in lines)


def plot_data(mir: MirSpec, verdicts: list[Verdict]) -> dict:
    """Chart-ready series from changed-mode verdicts.

    Numeric streams plot their values, Bool streams plot 0/1; String and
    tuple streams have no sensible y-axis and are left out.
    """
    series = []
    for sid in _value_columns(mir):
        vt = mir.streams[sid].value_type
        if not (is_numeric(vt) or vt == BOOL):
            continue
        points = []
        for v in verdicts:
            if sid not in v.values or v.values[sid] is None:
                continue
            value = v.values[sid]
            if vt == BOOL:
                y = 1 if value else 0
            else:
                y = json_value(value)
            points.append([float(v.time), y])
        series.append({"stream": mir.streams[sid].name, "points": points})
    triggers = []
    for t in mir.triggers:
        times = [
            float(v.time)
            for v in verdicts
            if any(index == t.index for index, _ in v.fired)
        ]
        triggers.append({"index": t.index, "message": t.message, "times": times})
    return {"series": series, "triggers": triggers}
