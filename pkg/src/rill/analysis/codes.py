"""Registry of all diagnostic codes.

Every Diagnostic carries one of these codes; tests assert emitted codes are
registered.  P = parse, E = static analysis, W = warning, T = trace input,
R = runtime.
"""
from __future__ import annotations

from rill.diagnostics import Severity

REGISTRY: dict[str, tuple[Severity, str]] = {
    "P001": (Severity.ERROR, "unexpected token"),
    "P002": (Severity.ERROR, "unterminated string literal"),
    "P003": (Severity.ERROR, "offset must be negative"),
    "P004": (Severity.ERROR, "unknown unit"),
    "E001": (Severity.ERROR, "duplicate stream name"),
    "E002": (Severity.ERROR, "undefined stream name"),
    "E003": (Severity.ERROR, "unknown function"),
    "E010": (Severity.ERROR, "type mismatch"),
    "E011": (Severity.ERROR, "trigger condition must be Bool"),
    "E012": (Severity.ERROR, "non-numeric aggregation target"),
    "E013": (Severity.ERROR, "mixed event-based/periodic synchronous access"),
    "E014": (Severity.ERROR, "frequency does not divide accessed frequency"),
    "E015": (Severity.ERROR, "pacing does not guarantee accessed value"),
    "E016": (Severity.ERROR, "sliding window outside a periodic stream"),
    "E017": (Severity.ERROR, "no pacing inferable"),
    "E018": (Severity.ERROR, "invalid pacing annotation target"),
    "E020": (Severity.ERROR, "zero-weight dependency cycle"),
    "E021": (Severity.ERROR, "window duration not an integer multiple of the period"),
    "W001": (Severity.WARNING, "aggregation without a default"),
    "T001": (Severity.ERROR, "unknown trace column"),
    "T002": (Severity.ERROR, "missing trace column"),
    "T003": (Severity.ERROR, "unparsable trace cell"),
    "T004": (Severity.ERROR, "non-monotonic trace time"),
    "T005": (Severity.ERROR, "trace row with all inputs absent"),
    "R001": (Severity.ERROR, "non-monotonic event timestamp"),
    "R002": (Severity.ERROR, "division or modulo by zero"),
    "R003": (Severity.ERROR, "integer overflow"),
}
