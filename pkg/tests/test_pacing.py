"""Pacing inference and compatibility checks.

The DNF formula operations are tested differentially against truth tables;
the inference rules are pinned by directed examples.
"""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from rill import lang
from rill.analysis import run_all
from rill.lang import (
    CONSTANT,
    EventPacing,
    PeriodicPacing,
    StreamId,
    StreamKind,
    formula_implies,
    normalize_dnf,
    render_pacing,
)

from reference import truth_table_equivalent, truth_table_implies


def hints_of(src: str) -> dict[str, str]:
    rep = run_all(src)
    assert rep.ok, [(d.code, d.message) for d in rep.diagnostics]
    return {h.name: h.pacing for h in rep.hints}


def pacing_codes(src: str) -> list[str]:
    return [d.code for d in run_all(src).diagnostics]


# ---------------------------------------------------------------------------
# formula algebra vs. truth tables


def _rand_dnf(rng: random.Random, nvars: int) -> frozenset:
    clauses = []
    for _ in range(rng.randint(1, 4)):
        size = rng.randint(1, min(4, nvars))
        clauses.append(frozenset(rng.sample(range(nvars), size)))
    return frozenset(clauses)


def test_implication_matches_truth_tables():
    rng = random.Random(515)
    agree_true = agree_false = 0
    for _ in range(600):
        nvars = rng.randint(1, 6)
        a, b = _rand_dnf(rng, nvars), _rand_dnf(rng, nvars)
        want = truth_table_implies(a, b)
        assert formula_implies(a, b) == want, (a, b)
        agree_true += want
        agree_false += not want
    assert agree_true > 100 and agree_false > 100


def test_normalization_preserves_meaning_and_removes_subsumed():
    rng = random.Random(516)
    for _ in range(400):
        raw = _rand_dnf(rng, rng.randint(1, 6))
        norm = normalize_dnf(raw)
        assert truth_table_equivalent(raw, norm)
        # no clause may absorb another after normalization
        for c in norm:
            for d in norm:
                assert c is d or not c < d, (raw, norm)


def test_normalization_drops_superset_clause():
    assert normalize_dnf([frozenset({0}), frozenset({0, 1})]) == frozenset({frozenset({0})})


# ---------------------------------------------------------------------------
# rendering


@pytest.mark.parametrize(
    "pacing,names,want",
    [
        (PeriodicPacing(Fraction(1)), [], "@1Hz"),
        (PeriodicPacing(Fraction(1, 3)), [], "@1/3Hz"),
        (PeriodicPacing(Fraction(5, 2)), [], "@2.5Hz"),
        (CONSTANT, [], "@constant"),
        (EventPacing(frozenset({frozenset({0})})), ["lat"], "@lat"),
        (
            EventPacing(frozenset({frozenset({0, 1})})),
            ["lat", "lon"],
            "@(lat ∧ lon)",
        ),
    ],
)
def test_render_pacing(pacing, names, want):
    assert render_pacing(pacing, names) == want


# ---------------------------------------------------------------------------
# inference


def test_altitude_pacing(reports):
    hints = {h.name: h.pacing for h in reports["altitude.rill"].hints}
    assert hints == {
        "altitude": "@altitude",
        "avg_altitude": "@1Hz",
        "altitude_diff": "@altitude",
        "trigger": "@altitude",
    }


def test_accessing_two_inputs_infers_their_conjunction(reports):
    hints = {h.name: h.pacing for h in reports["geofence_pasted.rill"].hints}
    assert hints["check_lat"] == "@lat"
    assert hints["check_lon"] == "@(lat ∧ lon)"


def test_corrected_spec_is_single_input_paced(reports):
    hints = {h.name: h.pacing for h in reports["geofence_fixed.rill"].hints}
    assert hints["check_lon"] == "@lon"


def test_offset_access_contributes_to_inference():
    hints = hints_of(
        "input a : Int64\ninput b : Int64\n"
        "output x := a + b.offset(by: -1, or: 0)"
    )
    assert hints["x"] == "@(a ∧ b)"


def test_hold_access_does_not_constrain():
    hints = hints_of(
        "input a : Int64\ninput b : Int64\noutput x := a + b.hold(or: 0)"
    )
    assert hints["x"] == "@a"


def test_disjunction_annotation_is_accepted():
    hints = hints_of("input a : Int64\ninput b : Int64\noutput x @(a ∨ b) := a.hold(or: 0) + b.hold(or: 0)")
    assert hints["x"] == "@(a ∨ b)"


def test_pure_offset_cycle_is_constant(reports):
    hints = {h.name: h.pacing for h in reports["cycle_offset.rill"].hints}
    assert hints == {"a": "@constant", "b": "@constant"}


def test_self_offset_counter_follows_its_anchor():
    hints = hints_of("input tick : Bool\noutput n := n.offset(by: -1, or: 0) + (if tick then 1 else 0)")
    assert hints["n"] == "@tick"


def test_periodic_annotation_on_constant_expression():
    hints = hints_of("output c @1Hz := 1")
    assert hints["c"] == "@1Hz"


# ---------------------------------------------------------------------------
# errors


def test_unannotated_stream_may_not_access_periodic():
    codes = pacing_codes("input a : Int64\noutput p @2Hz := a.hold(or: 0)\noutput q := p + a")
    assert codes == ["E013"]


def test_slower_may_access_faster_but_not_vice_versa():
    ok = "input a : Int64\noutput p @2Hz := a.hold(or: 0)\noutput q @1Hz := p"
    assert run_all(ok).ok
    bad = "input a : Int64\noutput p @2Hz := a.hold(or: 0)\noutput q @3Hz := p"
    assert pacing_codes(bad) == ["E014"]


def test_non_integral_frequency_ratio_rejected():
    bad = "input a : Int64\noutput p @3Hz := a.hold(or: 0)\noutput q @2Hz := p"
    assert pacing_codes(bad) == ["E014"]


def test_event_annotation_must_guarantee_access():
    codes = pacing_codes("input a : Int64\ninput b : Int64\noutput x @a := b")
    assert codes == ["E015"]


def test_windows_need_a_periodic_accessor():
    codes = pacing_codes("input v : Float64\noutput w @v := v.aggregate(over: 2s, using: sum)")
    assert codes == ["E016"]


def test_no_anchor_and_no_annotation():
    assert pacing_codes("output c := 1 + 2") == ["E017"]


def test_window_alone_cannot_anchor_an_unannotated_stream():
    codes = pacing_codes("input v : Float64\noutput w := v.aggregate(over: 2s, using: sum)")
    assert codes == ["E017"]


def test_annotation_may_only_name_inputs():
    codes = pacing_codes("input a : Int64\noutput y := a\noutput x @y := a")
    assert codes == ["E018"]


def test_trigger_pacing_is_inferred_like_an_output():
    rep = run_all("input a : Int64\noutput p @2Hz := a.hold(or: 0)\ntrigger p > 0")
    assert [d.code for d in rep.diagnostics] == ["E013"]
