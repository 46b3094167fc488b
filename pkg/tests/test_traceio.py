"""Trace reading (CSV) and verdict writing (CSV / JSON Lines / plot data)."""

from __future__ import annotations

import json
import math
import random
from fractions import Fraction

import pytest

from rill import mir as mirmod
from rill.analysis import run_all
from rill.interpreter import Event, VerdictMode, run_trace
from rill.lang import format_time
from rill.traceio import (
    json_value,
    parse_trace,
    plot_data,
    render_value,
    verdict_json,
    write_verdicts_csv,
    write_verdicts_jsonl,
)

from conftest import fixture_text
import genspec

F = Fraction


def program(src: str):
    rep = run_all(src)
    assert rep.ok, [(d.code, d.message) for d in rep.diagnostics]
    return rep, mirmod.lower(rep)


@pytest.fixture(scope="module")
def listing():
    rep = run_all(fixture_text("altitude.rill"))
    return rep, mirmod.lower(rep)


# ---------------------------------------------------------------------------
# reading


def test_reads_the_altitude_trace(listing):
    _, m = listing
    events, err = parse_trace(fixture_text("altitude.csv"), m)
    assert err is None
    assert [(e.time, e.values) for e in events] == [
        (F(0), {0: 100.0}),
        (F(2, 5), {0: 100.0}),
        (F(4, 5), {0: 100.0}),
        (F(6, 5), {0: 120.0}),
    ]


def test_empty_cells_mean_absent():
    _, m = program("input a : Int64\ninput b : Int64\noutput x := a + b")
    events, err = parse_trace("time,a,b\n0.0,7,\n1.0,,9\n", m)
    assert err is None
    assert [e.values for e in events] == [{0: 7}, {1: 9}]


def test_column_order_need_not_match_declaration():
    _, m = program("input a : Int64\ninput b : Int64\noutput x := a + b")
    events, err = parse_trace("time,b,a\n0.0,1,2\n", m)
    assert err is None
    assert events[0].values == {0: 2, 1: 1}


def test_blank_lines_are_skipped(listing):
    _, m = listing
    events, err = parse_trace("time,altitude\n\n0.0,1.0\n\n", m)
    assert err is None and len(events) == 1


def test_bool_and_string_cells():
    _, m = program(
        "input f : Bool\ninput s : String\noutput x := f && s == \"go\""
    )
    events, err = parse_trace('time,f,s\n0.5,true,go\n1.0,false,"a,b"\n', m)
    assert err is None
    assert events[0].values == {0: True, 1: "go"}
    assert events[1].values == {0: False, 1: "a,b"}


def test_unknown_column_is_t001(listing):
    _, m = listing
    _, err = parse_trace("time,altitude,junk\n", m)
    assert err is not None and err.code == "T001" and "junk" in err.message


def test_duplicate_column_is_t001(listing):
    _, m = listing
    _, err = parse_trace("time,altitude,altitude\n", m)
    assert err is not None and err.code == "T001"


def test_missing_header_is_t001(listing):
    _, m = listing
    _, err = parse_trace("", m)
    assert err is not None and err.code == "T001" and err.line == 0


def test_missing_input_column_is_t002(listing):
    _, m = listing
    _, err = parse_trace("time\n0.0\n", m)
    assert err is not None and err.code == "T002" and "altitude" in err.message


def test_tuple_inputs_have_no_cell_form():
    _, m = program("input p : (Int64, Bool)\noutput x := p.0")
    _, err = parse_trace("time,p\n0.0,1\n", m)
    assert err is not None and err.code == "T002"


@pytest.mark.parametrize(
    "row,detail",
    [
        ("0.0,abc", "'altitude'"),
        ("zzz,1.0", "'time'"),
        ("0.0,1.0,9", "cells"),
    ],
)
def test_unparsable_cells_are_t003(listing, row, detail):
    _, m = listing
    events, err = parse_trace(f"time,altitude\n{row}\n", m)
    assert err is not None and err.code == "T003" and err.line == 2
    assert detail in err.message
    assert events == []


def test_decreasing_time_is_t004_and_keeps_earlier_events(listing):
    _, m = listing
    events, err = parse_trace("time,altitude\n1.0,1.0\n0.5,2.0\n", m)
    assert err is not None and err.code == "T004" and err.line == 3
    assert len(events) == 1


def test_all_absent_row_is_t005():
    _, m = program("input a : Int64\ninput b : Int64\noutput x := a + b")
    _, err = parse_trace("time,a,b\n1.2,,\n", m)
    assert err is not None and err.code == "T005"


def test_out_of_range_integer_cell():
    _, m = program("input a : Int64\noutput x := a")
    _, err = parse_trace(f"time,a\n0.0,{2**63}\n", m)
    assert err is not None and err.code == "T003" and "range" in err.message


def test_generated_traces_round_trip():
    """Formatting rows as CSV and re-parsing them recovers the events."""
    rng = random.Random(2024)
    for _ in range(40):
        _text, rep = genspec.gen_event_spec(rng)
        m = mirmod.lower(rep)
        rows = genspec.gen_rows(rng, rep, max_events=30)
        names = list(m.event_layout)
        lines = ["time," + ",".join(names)]
        for t, vals in rows:
            cells = [format_time(t)]
            for n in names:
                if n not in vals:
                    cells.append("")
                    continue
                v = vals[n]
                if isinstance(v, bool):
                    cells.append("true" if v else "false")
                else:
                    cells.append(repr(v) if isinstance(v, float) else str(v))
            lines.append(",".join(cells))
        events, err = parse_trace("\n".join(lines) + "\n", m)
        assert err is None, err
        want = genspec.rows_to_events(m, rows)
        assert [(e.time, e.values) for e in events] == [
            (e.time, e.values) for e in want
        ]


# ---------------------------------------------------------------------------
# writing


def test_altitude_csv_golden(listing):
    _, m = listing
    events, _ = parse_trace(fixture_text("altitude.csv"), m)
    verdicts, _ = run_trace(m, events, VerdictMode.CHANGED, F(0))
    assert write_verdicts_csv(m, verdicts) == (
        "time,kind,altitude,avg_altitude,altitude_diff,Trigger 0\r\n"
        "0.0,event,100.0,,0.0,\r\n"
        "0.4,event,100.0,,0.0,\r\n"
        "0.8,event,100.0,,0.0,\r\n"
        "1.0,periodic,,100.0,,\r\n"
        "1.2,event,120.0,,20.0,Altitude changed too quickly\r\n"
    ).replace("\r\n", "\n")


def test_altitude_jsonl_golden(listing):
    _, m = listing
    events, _ = parse_trace(fixture_text("altitude.csv"), m)
    verdicts, _ = run_trace(m, events, VerdictMode.TRIGGERS, F(0))
    lines = write_verdicts_jsonl(m, verdicts).splitlines()
    assert len(lines) == 5
    assert json.loads(lines[-1]) == {
        "time": "1.2",
        "kind": "event",
        "values": {},
        "fired": [{"index": 0, "message": "Altitude changed too quickly"}],
    }


def test_empty_run_writes_header_only(listing):
    _, m = listing
    assert write_verdicts_csv(m, []).strip() == (
        "time,kind,altitude,avg_altitude,altitude_diff,Trigger 0"
    )
    assert write_verdicts_jsonl(m, []) == ""


def test_special_floats_encode_as_strings():
    assert json_value(math.nan) == "NaN"
    assert json_value(math.inf) == "Infinity"
    assert json_value(-math.inf) == "-Infinity"
    assert json_value((1, 2)) == [1, 2]
    _, m = program("input a : Float64\noutput x := a / 0.0")
    verdicts, _ = run_trace(m, [Event(F(0), {0: 1.0})], VerdictMode.CHANGED, F(0))
    doc = verdict_json(m, verdicts[0])
    assert doc["values"]["x"] == "Infinity"


def test_render_value_forms():
    assert render_value(True) == "true"
    assert render_value((1, False)) == "(1, false)"
    assert render_value(2.5) == "2.5"
    assert render_value("text") == "text"


def test_tuple_values_render_in_csv_and_jsonl():
    _, m = program("input a : Int64\noutput p := (a, a > 0)")
    verdicts, _ = run_trace(m, [Event(F(0), {0: 4})], VerdictMode.CHANGED, F(0))
    csv_text = write_verdicts_csv(m, verdicts)
    assert '"(4, true)"' in csv_text
    doc = verdict_json(m, verdicts[0])
    assert doc["values"]["p"] == [4, True]


# ---------------------------------------------------------------------------
# plot data


def test_altitude_plot_series(listing):
    _, m = listing
    events, _ = parse_trace(fixture_text("altitude.csv"), m)
    verdicts, _ = run_trace(m, events, VerdictMode.CHANGED, F(0))
    doc = plot_data(m, verdicts)
    assert [s["stream"] for s in doc["series"]] == [
        "altitude",
        "avg_altitude",
        "altitude_diff",
    ]
    assert doc["series"][1]["points"] == [[1.0, 100.0]]
    assert doc["triggers"] == [
        {
            "index": 0,
            "message": "Altitude changed too quickly",
            "times": [1.2],
        }
    ]


def test_plot_excludes_strings_and_tuples_and_encodes_bools():
    rep, m = program(
        "input mode : String\ninput level : Int64\n"
        "output paired := (level, level)\n"
        "output high := level > 5\n"
    )
    events = [
        Event(F(0), {0: "a", 1: 3}),
        Event(F(1), {0: "b", 1: 9}),
    ]
    verdicts, _ = run_trace(m, events, VerdictMode.CHANGED, F(0))
    doc = plot_data(m, verdicts)
    names = [s["stream"] for s in doc["series"]]
    assert names == ["level", "high"]
    high = doc["series"][1]["points"]
    assert high == [[0.0, 0], [1.0, 1]]


def test_plot_with_no_verdicts_is_empty(listing):
    _, m = listing
    doc = plot_data(m, [])
    assert all(s["points"] == [] for s in doc["series"])
    assert all(t["times"] == [] for t in doc["triggers"])
