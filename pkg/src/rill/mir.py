"""Execution-ready lowering of an analyzed specification.

The lowered form fixes everything the engine needs ahead of time: a total
evaluation order compatible with synchronous dependencies, ring-buffer sizes,
pane counts and periods for every sliding window, the input-column layout of
incoming events, periodic deadline groups, and the message attached to each
trigger.  It serializes to JSON (version 1) so other tools can consume the
lowered form without re-running the analyses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from heapq import heapify, heappop, heappush

from rill.analysis.depgraph import EdgeKind
from rill.analysis.memory import window_occurrences
from rill.analysis.report import AnalysisReport
from rill.diagnostics import Span, span_text
from rill.lang import (
    BOOL,
    AggFunc,
    Binary,
    BoolLit,
    ConstantPacing,
    EventPacing,
    Expr,
    FloatLit,
    FnCall,
    HoldAccess,
    IfThenElse,
    IntLit,
    OffsetAccess,
    PacingType,
    PeriodicPacing,
    Scalar,
    Specification,
    StreamId,
    StreamKind,
    StreamRef,
    StringLit,
    TupleExpr,
    TupleProj,
    TupleType,
    Unary,
    ValueType,
    WindowAccess,
    stream_id_from_json,
)

MIR_VERSION = 1


@dataclass(frozen=True)
class WindowSlot:
    index: int
    node_id: int  # the window expression node this slot backs
    accessor: StreamId
    target: StreamId
    duration: Fraction
    agg: AggFunc
    default: Expr | None
    panes: int
    period: Fraction  # accessor period = pane width


@dataclass(frozen=True)
class TriggerSlot:
    index: int
    sid: StreamId
    message: str


@dataclass
class MirStream:
    sid: StreamId
    name: str
    value_type: ValueType
    pacing: PacingType
    buffer_size: int
    expression: Expr | None  # None for inputs


@dataclass
class MirSpec:
    streams: dict[StreamId, MirStream]  # declaration order
    eval_order: list[StreamId]  # outputs and triggers, dependency-compatible
    event_layout: dict[str, int]  # input name -> event column
    periodic_groups: list[tuple[Fraction, list[StreamId]]]  # freq, members
    windows: list[WindowSlot]
    triggers: list[TriggerSlot]
    resolution: dict[int, StreamId]  # access node id -> accessed stream
    node_types: dict[int, ValueType]  # expression node id -> value type
    hyper_period: Fraction | None

    def window_for_node(self, node_id: int) -> WindowSlot:
        for slot in self.windows:
            if slot.node_id == node_id:
                return slot
        raise KeyError(node_id)


def _rational_lcm(values: list[Fraction]) -> Fraction | None:
    if not values:
        return None
    num = values[0].numerator
    den = values[0].denominator
    for v in values[1:]:
        num = math.lcm(num, v.numerator)
        den = math.gcd(den, v.denominator)
    return Fraction(num, den)


def _eval_order(spec: Specification, report: AnalysisReport) -> list[StreamId]:
    assert report.graph is not None
    nodes = [s for s in spec.stream_ids() if s.kind is not StreamKind.INPUT]
    indeg = {s: 0 for s in nodes}
    succ: dict[StreamId, list[StreamId]] = {s: [] for s in nodes}
    for e in report.graph.edges:
        if e.kind is not EdgeKind.SYNC:
            continue
        if e.src in indeg and e.dst in indeg:
            succ[e.dst].append(e.src)
            indeg[e.src] += 1
    ready = [s.rank for s in nodes if indeg[s] == 0]
    heapify(ready)
    by_rank = {s.rank: s for s in nodes}
    order: list[StreamId] = []
    while ready:
        sid = by_rank[heappop(ready)]
        order.append(sid)
        for nxt in succ[sid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heappush(ready, nxt.rank)
    assert len(order) == len(nodes), "cyclic sync dependencies survived analysis"
    return order


def lower(report: AnalysisReport) -> MirSpec:
    """Lower a clean analysis report.  Requires every phase to have run."""
    spec = report.spec
    assert spec is not None and report.ok
    assert report.vtypes and report.pacing is not None
    assert report.graph is not None and report.bounds is not None
    assert report.table is not None

    streams: dict[StreamId, MirStream] = {}
    for sid in spec.stream_ids():
        vt = BOOL if sid.kind is StreamKind.TRIGGER else report.vtypes.streams[sid]
        streams[sid] = MirStream(
            sid=sid,
            name=spec.display_name(sid),
            value_type=vt,
            pacing=report.pacing[sid],
            buffer_size=report.bounds.per_stream[sid],
            expression=spec.expression_of(sid),
        )

    groups: dict[Fraction, list[StreamId]] = {}
    for sid in spec.stream_ids():
        p = report.pacing[sid]
        if isinstance(p, PeriodicPacing):
            groups.setdefault(p.frequency, []).append(sid)
    periodic_groups = sorted(groups.items(), key=lambda kv: kv[0], reverse=True)

    windows = []
    for occ, accessor, node in window_occurrences(spec):
        accessor_pacing = report.pacing[accessor]
        assert isinstance(accessor_pacing, PeriodicPacing)
        windows.append(
            WindowSlot(
                index=occ,
                node_id=node.node_id,
                accessor=accessor,
                target=report.table.resolution[node.node_id],
                duration=node.duration,
                agg=node.agg,
                default=node.default,
                panes=report.bounds.per_window[occ],
                period=accessor_pacing.period,
            )
        )

    triggers = []
    for idx, decl in enumerate(spec.triggers):
        message = decl.message
        if message is None:
            message = span_text(spec.source_text, decl.condition.span)
        triggers.append(TriggerSlot(idx, StreamId(StreamKind.TRIGGER, idx), message))

    periods = [Fraction(1) / f for f, _ in periodic_groups]
    return MirSpec(
        streams=streams,
        eval_order=_eval_order(spec, report),
        event_layout={decl.name: i for i, decl in enumerate(spec.inputs)},
        periodic_groups=periodic_groups,
        windows=windows,
        triggers=triggers,
        resolution=dict(report.table.resolution),
        node_types=dict(report.vtypes.nodes),
        hyper_period=_rational_lcm(periods),
    )


# ---------------------------------------------------------------------------
# Serialization


def _frac_to_json(f: Fraction) -> str:
    return str(f)


def _frac_from_json(s: str) -> Fraction:
    return Fraction(s)


def _vtype_to_json(vt: ValueType):
    if isinstance(vt, Scalar):
        return vt.name
    assert isinstance(vt, TupleType)
    return [_vtype_to_json(e) for e in vt.elements]


def _vtype_from_json(data) -> ValueType:
    if isinstance(data, str):
        return Scalar(data)
    return TupleType(tuple(_vtype_from_json(e) for e in data))


def _pacing_to_json(p: PacingType):
    if isinstance(p, PeriodicPacing):
        return {"kind": "periodic", "frequency": _frac_to_json(p.frequency)}
    if isinstance(p, EventPacing):
        return {"kind": "event", "dnf": sorted(sorted(c) for c in p.dnf)}
    return {"kind": "constant"}


def _pacing_from_json(data) -> PacingType:
    if data["kind"] == "periodic":
        return PeriodicPacing(_frac_from_json(data["frequency"]))
    if data["kind"] == "event":
        return EventPacing(frozenset(frozenset(c) for c in data["dnf"]))
    return ConstantPacing()


def _expr_to_json(e: Expr | None):
    if e is None:
        return None
    base = {"span": [e.span.start, e.span.end], "nodeId": e.node_id}
    if isinstance(e, IntLit):
        return {"op": "int", "value": str(e.value), **base}
    if isinstance(e, FloatLit):
        return {"op": "float", "value": e.value, **base}
    if isinstance(e, BoolLit):
        return {"op": "bool", "value": e.value, **base}
    if isinstance(e, StringLit):
        return {"op": "string", "value": e.value, **base}
    if isinstance(e, StreamRef):
        return {"op": "ref", "name": e.name, **base}
    if isinstance(e, OffsetAccess):
        return {
            "op": "offset",
            "name": e.name,
            "offset": e.offset,
            "default": _expr_to_json(e.default),
            **base,
        }
    if isinstance(e, HoldAccess):
        return {"op": "hold", "name": e.name, "default": _expr_to_json(e.default), **base}
    if isinstance(e, WindowAccess):
        return {
            "op": "window",
            "name": e.name,
            "duration": _frac_to_json(e.duration),
            "agg": e.agg.value,
            "default": _expr_to_json(e.default),
            **base,
        }
    if isinstance(e, Unary):
        return {"op": "unary", "sym": e.op, "operand": _expr_to_json(e.operand), **base}
    if isinstance(e, Binary):
        return {
            "op": "binary",
            "sym": e.op,
            "left": _expr_to_json(e.left),
            "right": _expr_to_json(e.right),
            **base,
        }
    if isinstance(e, IfThenElse):
        return {
            "op": "ite",
            "condition": _expr_to_json(e.condition),
            "then": _expr_to_json(e.then_branch),
            "else": _expr_to_json(e.else_branch),
            **base,
        }
    if isinstance(e, FnCall):
        return {
            "op": "call",
            "func": e.func,
            "args": [_expr_to_json(a) for a in e.args],
            **base,
        }
    if isinstance(e, TupleExpr):
        return {"op": "tuple", "elements": [_expr_to_json(x) for x in e.elements], **base}
    if isinstance(e, TupleProj):
        return {
            "op": "proj",
            "operand": _expr_to_json(e.operand),
            "index": e.index,
            **base,
        }
    raise TypeError(f"unhandled expression node: {e!r}")


def _expr_from_json(data) -> Expr | None:
    if data is None:
        return None
    span = Span(data["span"][0], data["span"][1])
    nid = data["nodeId"]
    op = data["op"]
    kw = {"span": span, "node_id": nid}
    if op == "int":
        return IntLit(int(data["value"]), **kw)
    if op == "float":
        return FloatLit(float(data["value"]), **kw)
    if op == "bool":
        return BoolLit(bool(data["value"]), **kw)
    if op == "string":
        return StringLit(data["value"], **kw)
    if op == "ref":
        return StreamRef(data["name"], **kw)
    if op == "offset":
        return OffsetAccess(
            data["name"], data["offset"], _expr_from_json(data["default"]), **kw
        )
    if op == "hold":
        return HoldAccess(data["name"], _expr_from_json(data["default"]), **kw)
    if op == "window":
        return WindowAccess(
            data["name"],
            _frac_from_json(data["duration"]),
            AggFunc(data["agg"]),
            _expr_from_json(data["default"]),
            **kw,
        )
    if op == "unary":
        return Unary(data["sym"], _expr_from_json(data["operand"]), **kw)
    if op == "binary":
        return Binary(
            data["sym"],
            _expr_from_json(data["left"]),
            _expr_from_json(data["right"]),
            **kw,
        )
    if op == "ite":
        return IfThenElse(
            _expr_from_json(data["condition"]),
            _expr_from_json(data["then"]),
            _expr_from_json(data["else"]),
            **kw,
        )
    if op == "call":
        return FnCall(data["func"], [_expr_from_json(a) for a in data["args"]], **kw)
    if op == "tuple":
        return TupleExpr([_expr_from_json(x) for x in data["elements"]], **kw)
    if op == "proj":
        return TupleProj(_expr_from_json(data["operand"]), data["index"], **kw)
    raise ValueError(f"unhandled expression op: {op!r}")


def serialize_mir(mir: MirSpec) -> dict:
    return {
        "version": MIR_VERSION,
        "streams": [
            {
                "id": s.sid.json_id,
                "name": s.name,
                "valueType": _vtype_to_json(s.value_type),
                "pacing": _pacing_to_json(s.pacing),
                "bufferSize": s.buffer_size,
                "expression": _expr_to_json(s.expression),
            }
            for s in mir.streams.values()
        ],
        "evalOrder": [s.json_id for s in mir.eval_order],
        "eventLayout": mir.event_layout,
        "periodicGroups": [
            {"frequency": _frac_to_json(f), "members": [s.json_id for s in members]}
            for f, members in mir.periodic_groups
        ],
        "windows": [
            {
                "index": w.index,
                "nodeId": w.node_id,
                "accessor": w.accessor.json_id,
                "target": w.target.json_id,
                "duration": _frac_to_json(w.duration),
                "agg": w.agg.value,
                "default": _expr_to_json(w.default),
                "panes": w.panes,
                "period": _frac_to_json(w.period),
            }
            for w in mir.windows
        ],
        "triggers": [
            {"index": t.index, "id": t.sid.json_id, "message": t.message}
            for t in mir.triggers
        ],
        "resolution": {str(nid): sid.json_id for nid, sid in mir.resolution.items()},
        "nodeTypes": {
            str(nid): _vtype_to_json(vt) for nid, vt in mir.node_types.items()
        },
        "hyperPeriod": _frac_to_json(mir.hyper_period) if mir.hyper_period else None,
    }


def deserialize_mir(data: dict) -> MirSpec:
    if data.get("version") != MIR_VERSION:
        raise ValueError(f"unsupported lowered-form version: {data.get('version')!r}")
    streams: dict[StreamId, MirStream] = {}
    for s in data["streams"]:
        sid = stream_id_from_json(s["id"])
        streams[sid] = MirStream(
            sid=sid,
            name=s["name"],
            value_type=_vtype_from_json(s["valueType"]),
            pacing=_pacing_from_json(s["pacing"]),
            buffer_size=s["bufferSize"],
            expression=_expr_from_json(s["expression"]),
        )
    return MirSpec(
        streams=streams,
        eval_order=[stream_id_from_json(x) for x in data["evalOrder"]],
        event_layout=dict(data["eventLayout"]),
        periodic_groups=[
            (
                _frac_from_json(g["frequency"]),
                [stream_id_from_json(m) for m in g["members"]],
            )
            for g in data["periodicGroups"]
        ],
        windows=[
            WindowSlot(
                index=w["index"],
                node_id=w["nodeId"],
                accessor=stream_id_from_json(w["accessor"]),
                target=stream_id_from_json(w["target"]),
                duration=_frac_from_json(w["duration"]),
                agg=AggFunc(w["agg"]),
                default=_expr_from_json(w["default"]),
                panes=w["panes"],
                period=_frac_from_json(w["period"]),
            )
            for w in data["windows"]
        ],
        triggers=[
            TriggerSlot(t["index"], stream_id_from_json(t["id"]), t["message"])
            for t in data["triggers"]
        ],
        resolution={
            int(nid): stream_id_from_json(sid)
            for nid, sid in data["resolution"].items()
        },
        node_types={
            int(nid): _vtype_from_json(vt) for nid, vt in data["nodeTypes"].items()
        },
        hyper_period=(
            _frac_from_json(data["hyperPeriod"]) if data["hyperPeriod"] else None
        ),
    )
