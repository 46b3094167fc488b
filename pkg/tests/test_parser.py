"""Parser: round-trips, precedence, exact rationals, and error codes."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from rill import lang
from rill.lang import (
    Binary,
    FreqAnnotation,
    OffsetAccess,
    PeriodicPacing,
    WindowAccess,
    pretty,
)
from rill.parser import parse

from conftest import CORPUS, fixture_text
import genspec


def strip(node):
    """Structural fingerprint of an AST, ignoring spans and node ids."""
    if isinstance(node, (list, tuple)):
        return tuple(strip(n) for n in node)
    if hasattr(node, "__dataclass_fields__"):
        items = []
        for name in node.__dataclass_fields__:
            if name in ("span", "name_span", "node_id", "source_text"):
                continue
            items.append((name, strip(getattr(node, name))))
        return (type(node).__name__, tuple(items))
    return node


def parse_ok(src):
    r = parse(src)
    assert r.ok, [(d.code, d.message) for d in r.diagnostics]
    return r.spec


def codes(src):
    return [d.code for d in parse(src).diagnostics]


# ---------------------------------------------------------------------------
# shape of the altitude example


def test_listing_shape():
    spec = parse_ok(fixture_text("altitude.rill"))
    assert [i.name for i in spec.inputs] == ["altitude"]
    assert [o.name for o in spec.outputs] == ["avg_altitude", "altitude_diff"]
    assert len(spec.triggers) == 1
    ann = spec.outputs[0].pacing_annotation
    assert isinstance(ann, FreqAnnotation) and ann.frequency == Fraction(1)
    assert spec.triggers[0].message == "Altitude changed too quickly"


def test_minute_duration_is_sixty_seconds():
    spec = parse_ok(fixture_text("altitude.rill"))
    windows = [n for n in lang.walk(spec.outputs[0].expression) if isinstance(n, WindowAccess)]
    assert len(windows) == 1
    assert windows[0].duration == Fraction(60)


@pytest.mark.parametrize(
    "unit_src,secs",
    [
        ("500ms", Fraction(1, 2)),
        ("2s", Fraction(2)),
        ("3min", Fraction(180)),
        ("1h", Fraction(3600)),
    ],
)
def test_duration_units_exact(unit_src, secs):
    spec = parse_ok(
        f"input a : Float64\noutput b @1Hz := a.aggregate(over: {unit_src}, using: avg, or: 0.0)"
    )
    win = [n for n in lang.walk(spec.outputs[0].expression) if isinstance(n, WindowAccess)][0]
    assert win.duration == secs


@pytest.mark.parametrize(
    "freq_src,hz",
    [("250mHz", Fraction(1, 4)), ("2Hz", Fraction(2)), ("1kHz", Fraction(1000)), ("0.5Hz", Fraction(1, 2))],
)
def test_frequency_units_exact(freq_src, hz):
    spec = parse_ok(f"input a : Float64\noutput b @{freq_src} := a.hold(or: 0.0)")
    ann = spec.outputs[0].pacing_annotation
    assert isinstance(ann, FreqAnnotation) and ann.frequency == hz


def test_decimal_timestamps_have_no_binary_noise():
    assert lang.parse_decimal("0.1") == Fraction(1, 10)
    assert lang.parse_decimal("2.50") == Fraction(5, 2)


# ---------------------------------------------------------------------------
# precedence and associativity


def test_and_binds_tighter_than_or():
    spec = parse_ok("input a : Bool\ninput b : Bool\ninput c : Bool\noutput d := a || b && c")
    top = spec.outputs[0].expression
    assert isinstance(top, Binary) and top.op == "||"
    assert isinstance(top.right, Binary) and top.right.op == "&&"


def test_comparison_non_associative():
    assert codes("input a : Int64\noutput b := a < 3 < 4") == ["P001"]


def test_unary_minus_in_products():
    spec = parse_ok("input a : Int64\noutput b := a * -3")
    top = spec.outputs[0].expression
    assert isinstance(top, Binary) and top.op == "*"
    assert isinstance(top.right, lang.Unary) and top.right.op == "-"


# ---------------------------------------------------------------------------
# error codes


def test_unexpected_token():
    assert codes("input a : Int64\noutput b := a +") == ["P001"]


def test_reserved_word_as_name():
    assert codes("input if : Int64") == ["P001"]


def test_unterminated_string():
    assert codes('trigger true "oops') == ["P002"]


@pytest.mark.parametrize("off", ["1", "0", "-0"])
def test_offset_must_reach_into_the_past(off):
    assert codes(f"input a : Int64\noutput b := a.offset(by: {off}, or: 0)") == ["P003"]


def test_unknown_units():
    assert codes("input a : Int64\noutput b @3foo := a") == ["P004"]
    assert codes(
        "input a : Float64\noutput b @1Hz := a.aggregate(over: 5xyz, using: avg)"
    ) == ["P004"]


def test_error_recovery_reports_multiple_declarations():
    src = "input a :\ninput b : Int64\noutput c := %\noutput d := b"
    diags = parse(src).diagnostics
    assert len(diags) >= 2
    assert all(d.code.startswith("P") for d in diags)


# ---------------------------------------------------------------------------
# round-trips


@pytest.mark.parametrize("name", CORPUS)
def test_pretty_reparse_is_structurally_identical(name):
    spec = parse_ok(fixture_text(name))
    again = parse_ok(pretty(spec))
    assert strip(again) == strip(spec)


@pytest.mark.parametrize("name", CORPUS)
def test_pretty_is_a_fixpoint(name):
    spec = parse_ok(fixture_text(name))
    once = pretty(spec)
    assert pretty(parse_ok(once)) == once


def test_round_trip_generated_specs():
    rng = random.Random(1105)
    for _ in range(120):
        text, _rep = genspec.gen_event_spec(rng)
        spec = parse_ok(text)
        assert strip(parse_ok(pretty(spec))) == strip(spec)


def test_fuzz_mutations_never_crash():
    """Parsing arbitrary mutations must return diagnostics, not raise."""
    rng = random.Random(906)
    seeds = [fixture_text(n) for n in CORPUS]
    glyphs = ':=@()."abc0159 \n\t¿%&-'
    for _ in range(400):
        src = list(rng.choice(seeds))
        for _ in range(rng.randint(1, 8)):
            kind = rng.random()
            pos = rng.randrange(len(src) + 1)
            if kind < 0.4 and src:
                src.pop(rng.randrange(len(src)))
            elif kind < 0.8:
                src.insert(pos, rng.choice(glyphs))
            elif src:
                src[rng.randrange(len(src))] = rng.choice(glyphs)
        r = parse("".join(src))
        assert r.ok or all(d.code.startswith("P") for d in r.diagnostics)
