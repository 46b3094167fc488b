"""Runs every analysis phase in order and bundles the results.

Phases: parse → naming → typing (values, then pacing) → dependency graph →
memory bounds.  A phase that reports errors stops the pipeline; everything
computed so far stays available on the report so callers (CLI, protocol
server, editor tooling) can still show partial results such as hints.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from rill import parser
from rill.diagnostics import Diagnostic, Severity, SourceMap
from rill.lang import (
    BOOL,
    PacingType,
    Specification,
    StreamId,
    StreamKind,
    render_pacing,
)

from .depgraph import DependencyGraph, build_graph, well_formedness
from .memory import MemoryBounds, memory_analysis
from .naming import NameTable, naming_analysis
from .values import ValueTypes, value_type_analysis
from .pacing import pacing_type_analysis


@dataclass
class Hint:
    name: str  # stream name, or "trigger" for trigger sinks
    kind: str
    value_type: str
    pacing: str

    def render(self) -> str:
        return f"{self.name}: {self.value_type} {self.pacing}"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "valueType": self.value_type,
            "pacing": self.pacing,
            "rendered": self.render(),
        }


@dataclass
class AnalysisReport:
    source: str
    spec: Specification | None
    diagnostics: list[Diagnostic]
    table: NameTable | None = None
    vtypes: ValueTypes | None = None
    pacing: dict[StreamId, PacingType] | None = None
    graph: DependencyGraph | None = None
    bounds: MemoryBounds | None = None
    hints: list[Hint] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(d.severity is Severity.ERROR for d in self.diagnostics)

    def to_json(self) -> dict:
        smap = SourceMap(self.source)
        return {
            "ok": self.ok,
            "diagnostics": [d.to_json(smap) for d in self.diagnostics],
            "hints": [h.to_json() for h in self.hints],
        }


def _hints(
    spec: Specification,
    vtypes: ValueTypes,
    pacing: dict[StreamId, PacingType],
) -> list[Hint]:
    input_names = [i.name for i in spec.inputs]
    hints = []
    for sid in spec.stream_ids():
        name = "trigger" if sid.kind is StreamKind.TRIGGER else spec.display_name(sid)
        vt = BOOL if sid.kind is StreamKind.TRIGGER else vtypes.streams[sid]
        hints.append(
            Hint(
                name,
                sid.kind.value,
                vt.render(),
                render_pacing(pacing[sid], input_names),
            )
        )
    return hints


def _sorted(diags: list[Diagnostic]) -> list[Diagnostic]:
    return sorted(diags, key=lambda d: (d.span.start, d.span.end, d.code))


def run_all(source: str) -> AnalysisReport:
    parsed = parser.parse(source)
    if not parsed.ok or parsed.spec is None:
        return AnalysisReport(source, parsed.spec, _sorted(parsed.diagnostics))
    spec = parsed.spec
    report = AnalysisReport(source, spec, [])
    diags: list[Diagnostic] = list(parsed.diagnostics)

    table, naming_diags = naming_analysis(spec)
    diags += naming_diags
    report.table = table
    if any(d.severity is Severity.ERROR for d in naming_diags):
        report.diagnostics = _sorted(diags)
        return report

    vtypes, value_diags = value_type_analysis(spec, table)
    pacing, pacing_diags = pacing_type_analysis(spec, table)
    diags += value_diags + pacing_diags
    report.vtypes = vtypes
    report.pacing = pacing
    report.hints = _hints(spec, vtypes, pacing)
    if any(d.severity is Severity.ERROR for d in value_diags + pacing_diags):
        report.diagnostics = _sorted(diags)
        return report

    graph = build_graph(spec, table)
    report.graph = graph
    cycle_diags = well_formedness(spec, graph)
    diags += cycle_diags
    if cycle_diags:
        report.diagnostics = _sorted(diags)
        return report

    bounds, memory_diags = memory_analysis(spec, graph, pacing)
    diags += memory_diags
    if not any(d.severity is Severity.ERROR for d in memory_diags):
        report.bounds = bounds
    report.diagnostics = _sorted(diags)
    return report
