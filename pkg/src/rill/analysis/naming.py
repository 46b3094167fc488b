"""Naming analysis: duplicate declarations, name resolution, known functions.

Produces a resolution map from access-node ids to stream ids.  Forward
references are allowed; triggers are unnamed and cannot be referenced.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from rill.diagnostics import Diagnostic, Related, Severity, Span
from rill.lang import (
    FnCall,
    HoldAccess,
    OffsetAccess,
    Specification,
    StreamId,
    StreamKind,
    StreamRef,
    WindowAccess,
    walk,
)

KNOWN_FUNCTIONS = {"abs": 1}


@dataclass
class NameTable:
    by_name: dict[str, StreamId] = field(default_factory=dict)
    resolution: dict[int, StreamId] = field(default_factory=dict)  # node id -> target


def _name_span(node) -> Span:
    # every access starts with the stream name; identifiers are ASCII here
    if isinstance(node, StreamRef):
        return node.span
    return Span(node.span.start, node.span.start + len(node.name.encode("utf-8")))


def naming_analysis(spec: Specification) -> tuple[NameTable, list[Diagnostic]]:
    diags: list[Diagnostic] = []
    table = NameTable()
    declared: dict[str, tuple[StreamId, Span]] = {}

    decls = [
        (inp.name, StreamId(StreamKind.INPUT, i), inp.name_span)
        for i, inp in enumerate(spec.inputs)
    ] + [
        (out.name, StreamId(StreamKind.OUTPUT, i), out.name_span)
        for i, out in enumerate(spec.outputs)
    ]
    for name, sid, span in decls:
        if name in declared:
            first_sid, first_span = declared[name]
            diags.append(
                Diagnostic(
                    "E001",
                    Severity.ERROR,
                    f"stream '{name}' is declared more than once",
                    span,
                    related=[Related("first declared here", first_span)],
                )
            )
            continue
        declared[name] = (sid, span)
        table.by_name[name] = sid

    for sid in spec.stream_ids():
        expr = spec.expression_of(sid)
        if expr is None:
            continue
        for node in walk(expr):
            if isinstance(node, (StreamRef, OffsetAccess, HoldAccess, WindowAccess)):
                target = table.by_name.get(node.name)
                if target is None:
                    diags.append(
                        Diagnostic(
                            "E002",
                            Severity.ERROR,
                            f"undefined stream '{node.name}'",
                            _name_span(node),
                        )
                    )
                else:
                    table.resolution[node.node_id] = target
            elif isinstance(node, FnCall) and node.func not in KNOWN_FUNCTIONS:
                diags.append(
                    Diagnostic(
                        "E003",
                        Severity.ERROR,
                        f"unknown function '{node.func}'",
                        node.span,
                    )
                )
    return table, diags
