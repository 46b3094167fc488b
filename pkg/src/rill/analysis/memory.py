"""Static memory bounds.

Every stream gets a fixed ring buffer: one slot for the current value plus
one per unit of the deepest offset lookback any accessor uses.  Every sliding
window gets a fixed pane buffer whose length is the window duration divided
by the accessor's period; the division must come out as a positive integer,
otherwise the window cannot be laid out on the accessor's evaluation grid.
"""
from __future__ import annotations

from dataclasses import dataclass

from rill.diagnostics import Diagnostic, Severity
from rill.lang import (
    PacingType,
    PeriodicPacing,
    Specification,
    StreamId,
    WindowAccess,
    format_duration_secs,
    format_frequency,
    walk,
)

from .depgraph import DependencyGraph, EdgeKind


@dataclass
class MemoryBounds:
    per_stream: dict[StreamId, int]
    per_window: dict[int, int]  # window occurrence index -> pane count


def window_occurrences(spec: Specification) -> list[tuple[int, StreamId, WindowAccess]]:
    """All window accesses in declaration order, with stable indices.

    The same numbering is used for pane-buffer bounds and for the engine's
    window state, so the two line up without a shared registry.
    """
    occurrences = []
    for sid in spec.stream_ids():
        expr = spec.expression_of(sid)
        if expr is None:
            continue
        for node in walk(expr):
            if isinstance(node, WindowAccess):
                occurrences.append((len(occurrences), sid, node))
    return occurrences


def memory_analysis(
    spec: Specification,
    graph: DependencyGraph,
    pacing: dict[StreamId, PacingType],
) -> tuple[MemoryBounds, list[Diagnostic]]:
    per_stream: dict[StreamId, int] = {}
    for sid in graph.vertices:
        deepest = 0
        for edge in graph.edges:
            if edge.dst != sid or edge.kind not in (EdgeKind.SYNC, EdgeKind.OFFSET):
                continue
            deepest = max(deepest, edge.weight or 0)
        per_stream[sid] = 1 + deepest

    per_window: dict[int, int] = {}
    diags: list[Diagnostic] = []
    for occ, accessor, node in window_occurrences(spec):
        accessor_pacing = pacing.get(accessor)
        if not isinstance(accessor_pacing, PeriodicPacing):
            continue  # already rejected by pacing analysis
        panes = node.duration * accessor_pacing.frequency
        if panes.denominator != 1 or panes <= 0:
            freq = format_frequency(accessor_pacing.frequency)
            diags.append(
                Diagnostic(
                    "E021",
                    Severity.ERROR,
                    f"window duration {format_duration_secs(node.duration)} is not "
                    f"a positive whole number of evaluation periods at {freq}",
                    node.span,
                )
            )
            continue
        per_window[occ] = int(panes)
    return MemoryBounds(per_stream, per_window), diags
