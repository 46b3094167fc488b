"""Diagnostics: spans, severities, and rendering.

Spans are half-open byte ranges into the UTF-8 encoding of the source.
Line/column positions are 1-based; columns count characters, not bytes.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"
    HINT = "hint"


@dataclass(frozen=True)
class Span:
    start: int  # byte offset, inclusive
    end: int  # byte offset, exclusive

    def join(self, other: Span) -> Span:
        return Span(min(self.start, other.start), max(self.end, other.end))


def span_text(source: str, span: Span) -> str:
    return source.encode("utf-8")[span.start : span.end].decode("utf-8", errors="replace")


class SourceMap:
    """Resolves byte offsets to 1-based (line, column) character positions."""

    def __init__(self, source: str) -> None:
        self.source = source
        # byte offset at which each character starts; sentinel entry for EOF
        offs = [0] * (len(source) + 1)
        pos = 0
        for i, ch in enumerate(source):
            offs[i] = pos
            pos += len(ch.encode("utf-8"))
        offs[len(source)] = pos
        self._char_starts = offs
        self._line_start_chars = [0] + [i + 1 for i, ch in enumerate(source) if ch == "\n"]

    def resolve(self, byte: int) -> tuple[int, int]:
        byte = max(0, min(byte, self._char_starts[-1]))
        char = bisect_right(self._char_starts, byte) - 1
        li = bisect_right(self._line_start_chars, char) - 1
        return li + 1, char - self._line_start_chars[li] + 1

    def line_text(self, line: int) -> str:
        starts = self._line_start_chars
        begin = starts[line - 1]
        end = starts[line] - 1 if line < len(starts) else len(self.source)
        return self.source[begin:end]


def resolve_span(source: str, span: Span) -> tuple[int, int, int, int]:
    smap = SourceMap(source)
    sl, sc = smap.resolve(span.start)
    el, ec = smap.resolve(span.end)
    return sl, sc, el, ec


@dataclass
class Related:
    message: str
    span: Span


@dataclass
class Diagnostic:
    code: str
    severity: Severity
    message: str
    span: Span
    related: list[Related] = field(default_factory=list)

    def to_json(self, smap: SourceMap) -> dict:
        return {
            "code": self.code,
            "severity": self.severity.value,
            "message": self.message,
            "span": _span_json(self.span, smap),
            "related": [
                {"message": r.message, "span": _span_json(r.span, smap)} for r in self.related
            ],
        }


def _span_json(span: Span, smap: SourceMap) -> dict:
    sl, sc = smap.resolve(span.start)
    el, ec = smap.resolve(span.end)
    return {
        "startByte": span.start,
        "endByte": span.end,
        "startLine": sl,
        "startCol": sc,
        "endLine": el,
        "endCol": ec,
    }


def sort_key(diag: Diagnostic) -> tuple[int, int, str]:
    return (diag.span.start, diag.span.end, diag.code)


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diags)


def render(diag: Diagnostic, smap: SourceMap) -> str:
    """Plain-text rendering with a caret underline, for terminal output."""
    out: list[str] = []
    sl, sc = smap.resolve(diag.span.start)
    el, ec = smap.resolve(diag.span.end)
    out.append(f"{diag.severity.value}[{diag.code}]: {diag.message}")
    out.append(f" --> {sl}:{sc}")
    line = smap.line_text(sl)
    gutter = str(sl)
    out.append(f" {' ' * len(gutter)} |")
    out.append(f" {gutter} | {line}")
    # underline within the first line of the span
    under_end = ec if el == sl else len(line) + 1
    width = max(1, under_end - sc)
    out.append(f" {' ' * len(gutter)} | {' ' * (sc - 1)}{'^' * width}")
    for rel in diag.related:
        rl, rc = smap.resolve(rel.span.start)
        out.append(f" note: {rel.message} ({rl}:{rc})")
    return "\n".join(out)
