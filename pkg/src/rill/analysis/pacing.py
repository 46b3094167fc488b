"""Pacing-type analysis.

Inputs are event-based on themselves.  Annotated streams take their
annotation (frequency or activation formula over inputs).  Unannotated
outputs and triggers infer the conjunction of the pacings of every stream
they access synchronously or by offset, computed as a least fixpoint so that
reference cycles settle; a stream whose accesses never reach an event source
gets the vacuous Constant pacing and simply never evaluates.  Inference never
produces a periodic pacing: synchronously accessing a periodic stream from an
unannotated (or event-annotated) stream is a timing error.

Checks, per synchronous/offset access from a (accessor) to b (accessed):
  - both event-based: pacing(a) must imply pacing(b)      (else E015)
  - both periodic:    freq(b) / freq(a) must be in ℕ⁺     (else E014)
  - event/periodic or constant/periodic mixes              (E013)
Windows additionally require the accessor itself to be periodic (E016), and
a stream with no annotation and no sync/offset access has no inferable
evaluation times at all (E017).  Hold accesses impose nothing.
"""
from __future__ import annotations

from functools import reduce

from rill.diagnostics import Diagnostic, Severity
from rill.lang import (
    ActAnd,
    ActIdent,
    ActivationAnnotation,
    ActOr,
    ConstantPacing,
    EventPacing,
    FreqAnnotation,
    HoldAccess,
    OffsetAccess,
    PacingType,
    PeriodicPacing,
    Specification,
    StreamId,
    StreamKind,
    StreamRef,
    WindowAccess,
    event_pacing,
    formula_and,
    formula_implies,
    formula_or,
    render_pacing,
    walk,
    CONSTANT,
)

from .naming import NameTable


def _annotation_dnf(formula, input_index: dict[str, int], diags, declared: set[str]):
    if isinstance(formula, ActIdent):
        idx = input_index.get(formula.name)
        if idx is None:
            if formula.name in declared:
                diags.append(
                    Diagnostic(
                        "E018",
                        Severity.ERROR,
                        f"pacing annotations may only reference input streams; "
                        f"'{formula.name}' is not an input",
                        formula.span,
                    )
                )
            else:
                diags.append(
                    Diagnostic(
                        "E002",
                        Severity.ERROR,
                        f"undefined stream '{formula.name}'",
                        formula.span,
                    )
                )
            return None
        return frozenset({frozenset({idx})})
    left = _annotation_dnf(formula.left, input_index, diags, declared)
    right = _annotation_dnf(formula.right, input_index, diags, declared)
    if left is None or right is None:
        return None
    if isinstance(formula, ActAnd):
        return formula_and(left, right)
    assert isinstance(formula, ActOr)
    return formula_or(left, right)


def pacing_type_analysis(
    spec: Specification, table: NameTable
) -> tuple[dict[StreamId, PacingType], list[Diagnostic]]:
    diags: list[Diagnostic] = []
    input_index = {inp.name: i for i, inp in enumerate(spec.inputs)}
    declared = set(table.by_name)
    input_names = [inp.name for inp in spec.inputs]

    pacing: dict[StreamId, PacingType] = {}
    broken: set[StreamId] = set()  # annotation failed; suppress follow-on checks

    for i in range(len(spec.inputs)):
        pacing[StreamId(StreamKind.INPUT, i)] = event_pacing([{i}])

    # sync/offset access lists per output/trigger
    accesses: dict[StreamId, list] = {}
    windows: dict[StreamId, list] = {}
    for sid in spec.stream_ids():
        expr = spec.expression_of(sid)
        if expr is None:
            continue
        acc, wins = [], []
        for node in walk(expr):
            if isinstance(node, (StreamRef, OffsetAccess)):
                acc.append(node)
            elif isinstance(node, WindowAccess):
                wins.append(node)
        accesses[sid] = acc
        windows[sid] = wins

    # annotated streams
    unannotated: list[StreamId] = []
    for i, out in enumerate(spec.outputs):
        sid = StreamId(StreamKind.OUTPUT, i)
        ann = out.pacing_annotation
        if ann is None:
            unannotated.append(sid)
        elif isinstance(ann, FreqAnnotation):
            pacing[sid] = PeriodicPacing(ann.frequency)
        else:
            assert isinstance(ann, ActivationAnnotation)
            dnf = _annotation_dnf(ann.formula, input_index, diags, declared)
            if dnf is None:
                pacing[sid] = CONSTANT
                broken.add(sid)
            else:
                pacing[sid] = EventPacing(dnf)
    for i in range(len(spec.triggers)):
        unannotated.append(StreamId(StreamKind.TRIGGER, i))

    # least fixpoint for unannotated streams: conjunction over accessed
    # event-based pacings; ⊥ (None) contributes nothing and unreachable
    # components settle at ⊥ = Constant
    state: dict[StreamId, frozenset | None] = {sid: None for sid in unannotated}

    def current_formula(target: StreamId):
        if target in state:
            return state[target]
        p = pacing.get(target)
        return p.dnf if isinstance(p, EventPacing) else None

    for _round in range(2 * len(unannotated) + 2):
        changed = False
        for sid in unannotated:
            parts = []
            for node in accesses[sid]:
                target = table.resolution[node.node_id]
                formula = current_formula(target)
                if formula is not None:
                    parts.append(formula)
            new = reduce(formula_and, parts) if parts else None
            if new != state[sid]:
                state[sid] = new
                changed = True
        if not changed:
            break
    else:  # pragma: no cover - fixpoint must settle within the round budget
        raise AssertionError("pacing fixpoint did not converge")

    for sid in unannotated:
        if not accesses[sid] and sid not in broken:
            what = "trigger" if sid.kind is StreamKind.TRIGGER else f"output '{spec.display_name(sid)}'"
            diags.append(
                Diagnostic(
                    "E017",
                    Severity.ERROR,
                    f"no pacing inferable for {what}: it has no synchronous or "
                    "offset accesses and no pacing annotation",
                    spec.decl_span(sid),
                )
            )
            pacing[sid] = CONSTANT
            broken.add(sid)
            continue
        pacing[sid] = EventPacing(state[sid]) if state[sid] else CONSTANT

    # access compatibility checks
    def render(p: PacingType) -> str:
        return render_pacing(p, input_names)

    for sid in spec.stream_ids():
        if sid in broken or sid.kind is StreamKind.INPUT:
            continue
        pa = pacing[sid]
        accessor = (
            "the trigger" if sid.kind is StreamKind.TRIGGER else f"'{spec.display_name(sid)}'"
        )
        for node in accesses.get(sid, ()):
            target = table.resolution[node.node_id]
            if target in broken:
                continue
            pb = pacing[target]
            tname = spec.display_name(target)
            if isinstance(pa, PeriodicPacing) and isinstance(pb, PeriodicPacing):
                ratio = pb.frequency / pa.frequency
                if ratio.denominator != 1 or ratio < 1:
                    diags.append(
                        Diagnostic(
                            "E014",
                            Severity.ERROR,
                            f"{accessor} at {render(pa)} cannot synchronously access "
                            f"'{tname}' at {render(pb)}: the accessor frequency must "
                            f"divide the accessed frequency",
                            node.span,
                        )
                    )
            elif isinstance(pa, PeriodicPacing) or isinstance(pb, PeriodicPacing):
                diags.append(
                    Diagnostic(
                        "E013",
                        Severity.ERROR,
                        f"{accessor} ({render(pa)}) and '{tname}' ({render(pb)}) have "
                        f"no common timing for a synchronous access; use "
                        f".hold(or: …) or align the pacing annotations",
                        node.span,
                    )
                )
            elif isinstance(pa, EventPacing):
                if isinstance(pb, ConstantPacing):
                    diags.append(
                        Diagnostic(
                            "E015",
                            Severity.ERROR,
                            f"{accessor} is paced {render(pa)} but '{tname}' never "
                            f"evaluates (constant pacing)",
                            node.span,
                        )
                    )
                elif not formula_implies(pa.dnf, pb.dnf):
                    diags.append(
                        Diagnostic(
                            "E015",
                            Severity.ERROR,
                            f"{accessor} is paced {render(pa)}, which does not "
                            f"guarantee a value of '{tname}' paced {render(pb)}",
                            node.span,
                        )
                    )
            # constant accessor: never evaluates, accesses are vacuous —
            # except that mixing with periodic targets was reported above
        for node in windows.get(sid, ()):
            if not isinstance(pa, PeriodicPacing):
                diags.append(
                    Diagnostic(
                        "E016",
                        Severity.ERROR,
                        f"sliding windows require a periodic accessor, but {accessor} "
                        f"is paced {render(pa)}; annotate it with a frequency "
                        f"such as @1Hz",
                        node.span,
                    )
                )
    return pacing, diags
