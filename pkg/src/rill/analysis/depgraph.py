"""Dependency graph construction and well-formedness.

One edge per distinct access (accessor → accessed): sync edges weigh 0,
offset edges the absolute lookback, hold and window edges carry no weight and
are excluded from the cycle check.  Since offset weights are ≥ 1, a cycle of
sync/offset edges has accumulated weight 0 exactly when it uses sync edges
only, so well-formedness reduces to acyclicity of the sync-edge subgraph.
The test suite checks this equivalence against exhaustive cycle enumeration.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from rill.diagnostics import Diagnostic, Related, Severity
from rill.lang import (
    HoldAccess,
    OffsetAccess,
    Specification,
    StreamId,
    StreamKind,
    StreamRef,
    WindowAccess,
    walk,
)

from .naming import NameTable


class EdgeKind(Enum):
    SYNC = "sync"
    OFFSET = "offset"
    HOLD = "hold"
    WINDOW = "window"


@dataclass(frozen=True)
class Edge:
    src: StreamId  # accessor
    dst: StreamId  # accessed
    kind: EdgeKind
    weight: int | None = None  # sync/offset only
    duration: Fraction | None = None  # window only


@dataclass
class DependencyGraph:
    vertices: list[StreamId]
    edges: list[Edge]

    def incoming(self, sid: StreamId) -> list[Edge]:
        return [e for e in self.edges if e.dst == sid]


def build_graph(spec: Specification, table: NameTable) -> DependencyGraph:
    edges: list[Edge] = []
    seen: set[Edge] = set()
    for sid in spec.stream_ids():
        expr = spec.expression_of(sid)
        if expr is None:
            continue
        for node in walk(expr):
            if isinstance(node, StreamRef):
                edge = Edge(sid, table.resolution[node.node_id], EdgeKind.SYNC, weight=0)
            elif isinstance(node, OffsetAccess):
                edge = Edge(
                    sid,
                    table.resolution[node.node_id],
                    EdgeKind.OFFSET,
                    weight=-node.offset,
                )
            elif isinstance(node, HoldAccess):
                edge = Edge(sid, table.resolution[node.node_id], EdgeKind.HOLD)
            elif isinstance(node, WindowAccess):
                edge = Edge(
                    sid,
                    table.resolution[node.node_id],
                    EdgeKind.WINDOW,
                    duration=node.duration,
                )
            else:
                continue
            if edge not in seen:
                seen.add(edge)
                edges.append(edge)
    return DependencyGraph(spec.stream_ids(), edges)


def _sync_sccs(graph: DependencyGraph) -> list[list[StreamId]]:
    """Tarjan over the sync-edge subgraph, iterative."""
    succ: dict[StreamId, list[StreamId]] = {v: [] for v in graph.vertices}
    for e in graph.edges:
        if e.kind is EdgeKind.SYNC:
            succ[e.src].append(e.dst)
    index: dict[StreamId, int] = {}
    low: dict[StreamId, int] = {}
    on_stack: set[StreamId] = set()
    stack: list[StreamId] = []
    sccs: list[list[StreamId]] = []
    counter = 0

    for root in graph.vertices:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(comp)
    return sccs


def well_formedness(spec: Specification, graph: DependencyGraph) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    self_loops = {
        e.src for e in graph.edges if e.kind is EdgeKind.SYNC and e.src == e.dst
    }
    for comp in _sync_sccs(graph):
        cyclic = len(comp) > 1 or comp[0] in self_loops
        if not cyclic:
            continue
        members = sorted(comp, key=lambda s: s.rank)
        names = ", ".join(f"'{spec.display_name(s)}'" for s in members)
        primary = members[0]
        related = [
            Related("part of the cycle", spec.decl_span(s)) for s in members[1:]
        ]
        diags.append(
            Diagnostic(
                "E020",
                Severity.ERROR,
                f"zero-weight dependency cycle among {names}: every access in the "
                f"cycle is synchronous; break it with .offset(by: -1, or: …)",
                spec.decl_span(primary),
                related=related,
            )
        )
    diags.sort(key=lambda d: d.span.start)
    return diags
