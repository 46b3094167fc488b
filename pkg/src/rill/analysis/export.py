"""Dependency-graph export: a JSON document for programmatic consumers and
Graphviz DOT for quick visual inspection.

The JSON shape is part of the tool's wire format (the playground renders it
directly), so field names and edge thickness rules are fixed:

  thickness = weight + 1   for sync/offset edges
  thickness = 1            for hold edges
  thickness = pane count   for window edges
"""
from __future__ import annotations

from rill.lang import (
    PacingType,
    PeriodicPacing,
    Specification,
    StreamId,
    duration_secs_json,
    format_duration_secs,
    pacing_class,
    render_pacing,
)

from .depgraph import DependencyGraph, Edge, EdgeKind
from .memory import MemoryBounds
from .values import ValueTypes

# Qualitative fill colours for the pacing view, assigned per pacing class in
# first-appearance order.
_PALETTE = [
    "#8dd3c7",
    "#ffffb3",
    "#bebada",
    "#fb8072",
    "#80b1d3",
    "#fdb462",
    "#b3de69",
    "#fccde5",
]

_SHAPES = {"input": "box", "output": "ellipse", "trigger": "octagon"}


def _edge_panes(edge: Edge, pacing: dict[StreamId, PacingType]) -> int:
    accessor = pacing[edge.src]
    assert isinstance(accessor, PeriodicPacing) and edge.duration is not None
    panes = edge.duration * accessor.frequency
    assert panes.denominator == 1
    return int(panes)


def _thickness(edge: Edge, pacing: dict[StreamId, PacingType]) -> int:
    if edge.kind in (EdgeKind.SYNC, EdgeKind.OFFSET):
        return (edge.weight or 0) + 1
    if edge.kind is EdgeKind.HOLD:
        return 1
    return _edge_panes(edge, pacing)


def graph_json(
    spec: Specification,
    graph: DependencyGraph,
    vtypes: ValueTypes,
    pacing: dict[StreamId, PacingType],
    bounds: MemoryBounds,
) -> dict:
    input_names = [i.name for i in spec.inputs]
    nodes = []
    for sid in graph.vertices:
        p = pacing[sid]
        nodes.append(
            {
                "id": sid.json_id,
                "name": spec.display_name(sid),
                "kind": sid.kind.value,
                "valueType": vtypes.streams[sid].render(),
                "pacing": render_pacing(p, input_names),
                "pacingClass": pacing_class(p, input_names),
                "memoryBound": bounds.per_stream[sid],
            }
        )
    edges = []
    for edge in graph.edges:
        entry: dict = {
            "from": edge.src.json_id,
            "to": edge.dst.json_id,
            "kind": edge.kind.value,
        }
        if edge.kind in (EdgeKind.SYNC, EdgeKind.OFFSET):
            entry["weight"] = edge.weight
        if edge.kind is EdgeKind.WINDOW:
            assert edge.duration is not None
            entry["durationSecs"] = duration_secs_json(edge.duration)
            entry["panes"] = _edge_panes(edge, pacing)
        entry["thickness"] = _thickness(edge, pacing)
        edges.append(entry)
    return {"version": 1, "nodes": nodes, "edges": edges}


def _quote(text: str) -> str:
    # Backslashes are left alone so Graphviz escapes like \n survive; none of
    # the quoted values (ids, names, pacing strings) contain literal ones.
    return '"' + text.replace('"', '\\"') + '"'


def _fill_colors(
    graph: DependencyGraph,
    pacing: dict[StreamId, PacingType],
    bounds: MemoryBounds,
    view: str,
    input_names: list[str],
) -> dict[StreamId, str]:
    colors: dict[StreamId, str] = {}
    if view == "pacing":
        assigned: dict[str, str] = {}
        for sid in graph.vertices:
            cls = pacing_class(pacing[sid], input_names)
            if cls not in assigned:
                assigned[cls] = _PALETTE[len(assigned) % len(_PALETTE)]
            colors[sid] = assigned[cls]
    else:
        for sid in graph.vertices:
            shade = max(35, 92 - 12 * (bounds.per_stream[sid] - 1))
            colors[sid] = f"gray{shade}"
    return colors


def _edge_label(edge: Edge) -> str:
    if edge.kind is EdgeKind.SYNC:
        return "sync"
    if edge.kind is EdgeKind.OFFSET:
        return f"offset -{edge.weight}"
    if edge.kind is EdgeKind.HOLD:
        return "hold"
    assert edge.duration is not None
    return f"window {format_duration_secs(edge.duration)}"


def graph_dot(
    spec: Specification,
    graph: DependencyGraph,
    vtypes: ValueTypes,
    pacing: dict[StreamId, PacingType],
    bounds: MemoryBounds,
    view: str = "pacing",
) -> str:
    if view not in ("pacing", "memory"):
        raise ValueError(f"unknown graph view: {view!r}")
    input_names = [i.name for i in spec.inputs]
    colors = _fill_colors(graph, pacing, bounds, view, input_names)
    lines = ["digraph dependencies {", "  rankdir=TB;", "  node [style=filled];"]
    for sid in graph.vertices:
        p = pacing[sid]
        label = f"{spec.display_name(sid)}\\n{vtypes.streams[sid].render()}"
        attrs = [
            f"label={_quote(label)}",
            f"shape={_SHAPES[sid.kind.value]}",
            f"fillcolor={_quote(colors[sid])}",
            f"rtlola_pacing={_quote(render_pacing(p, input_names))}",
            f"rtlola_memory={_quote(str(bounds.per_stream[sid]))}",
        ]
        lines.append(f"  {_quote(sid.json_id)} [{', '.join(attrs)}];")
    for edge in graph.edges:
        style = {
            EdgeKind.SYNC: "solid",
            EdgeKind.OFFSET: "solid",
            EdgeKind.HOLD: "dashed",
            EdgeKind.WINDOW: "dotted",
        }[edge.kind]
        attrs = [
            f"label={_quote(_edge_label(edge))}",
            f"penwidth={_thickness(edge, pacing)}",
            f"style={style}",
        ]
        lines.append(
            f"  {_quote(edge.src.json_id)} -> {_quote(edge.dst.json_id)} "
            f"[{', '.join(attrs)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
