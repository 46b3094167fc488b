"""Core language model shared by every stage.

Value types, pacing types (event-based activation formulas / periodic
frequencies), the desugared expression AST, stream declarations, and the
exact-rational formatting helpers used for frequencies, durations, and
timestamps.  Frequencies and durations are `fractions.Fraction` throughout;
no stage may round-trip them through floats.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from fractions import Fraction

from .diagnostics import Span

# ---------------------------------------------------------------------------
# Value types


@dataclass(frozen=True)
class ValueType:
    def render(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Scalar(ValueType):
    name: str

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class TupleType(ValueType):
    elements: tuple[ValueType, ...]

    def render(self) -> str:
        return "(" + ", ".join(e.render() for e in self.elements) + ")"


INT64 = Scalar("Int64")
UINT64 = Scalar("UInt64")
FLOAT64 = Scalar("Float64")
BOOL = Scalar("Bool")
STRING = Scalar("String")

# surface spellings accepted in annotations
VTYPE_ALIASES: dict[str, ValueType] = {
    "Int64": INT64,
    "Int": INT64,
    "UInt64": UINT64,
    "UInt": UINT64,
    "Float64": FLOAT64,
    "Float": FLOAT64,
    "Bool": BOOL,
    "String": STRING,
}

NUMERIC_TYPES = (INT64, UINT64, FLOAT64)


def is_numeric(vt: ValueType) -> bool:
    return vt in NUMERIC_TYPES


INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1
UINT64_MAX = 2**64 - 1


# ---------------------------------------------------------------------------
# Stream identity


class StreamKind(Enum):
    INPUT = "input"
    OUTPUT = "output"
    TRIGGER = "trigger"


_KIND_PREFIX = {StreamKind.INPUT: "in", StreamKind.OUTPUT: "out", StreamKind.TRIGGER: "trig"}
_KIND_RANK = {StreamKind.INPUT: 0, StreamKind.OUTPUT: 1, StreamKind.TRIGGER: 2}


@dataclass(frozen=True)
class StreamId:
    kind: StreamKind
    index: int

    @property
    def json_id(self) -> str:
        return f"{_KIND_PREFIX[self.kind]}:{self.index}"

    @property
    def rank(self) -> tuple[int, int]:
        return (_KIND_RANK[self.kind], self.index)

    def __repr__(self) -> str:  # compact in test diffs
        return f"StreamId({self.json_id})"


def stream_id_from_json(text: str) -> StreamId:
    prefix, _, idx = text.partition(":")
    for kind, p in _KIND_PREFIX.items():
        if p == prefix:
            return StreamId(kind, int(idx))
    raise ValueError(f"not a stream id: {text!r}")


# ---------------------------------------------------------------------------
# Pacing types
#
# Event-based pacing is a positive boolean formula over input streams, kept in
# disjunctive normal form: a frozenset of conjunctions, each conjunction a
# non-empty frozenset of input indices.  Normalization removes subsumed
# conjunctions, so structural equality coincides with logical equivalence for
# the formulas produced here.

Dnf = frozenset  # frozenset[frozenset[int]]


@dataclass(frozen=True)
class PacingType:
    pass


@dataclass(frozen=True)
class EventPacing(PacingType):
    dnf: frozenset

    def __post_init__(self) -> None:
        assert self.dnf, "event pacing needs at least one conjunction"
        assert all(conj for conj in self.dnf), "conjunctions must be non-empty"


@dataclass(frozen=True)
class PeriodicPacing(PacingType):
    frequency: Fraction  # Hz

    def __post_init__(self) -> None:
        assert self.frequency > 0

    @property
    def period(self) -> Fraction:  # seconds
        return 1 / self.frequency


@dataclass(frozen=True)
class ConstantPacing(PacingType):
    pass


CONSTANT = ConstantPacing()


def normalize_dnf(conjunctions) -> frozenset:
    """Drop duplicate and subsumed conjunctions (C ⊇ C' ⇒ C is redundant)."""
    conjs = {frozenset(c) for c in conjunctions if c}
    kept = {c for c in conjs if not any(o < c for o in conjs)}
    return frozenset(kept)


def event_pacing(conjunctions) -> EventPacing:
    return EventPacing(normalize_dnf(conjunctions))


def formula_and(a: frozenset, b: frozenset) -> frozenset:
    return normalize_dnf(ca | cb for ca in a for cb in b)


def formula_or(a: frozenset, b: frozenset) -> frozenset:
    return normalize_dnf(set(a) | set(b))


def formula_implies(a: frozenset, b: frozenset) -> bool:
    """a ⇒ b for positive DNF formulas.

    Sound and complete without truth tables: a conjunction implies a positive
    DNF exactly when it contains some disjunct of it wholesale.
    """
    return all(any(cb <= ca for cb in b) for ca in a)


def formula_satisfied(dnf: frozenset, present: set[int]) -> bool:
    return any(conj <= present for conj in dnf)


def formula_atoms(dnf: frozenset) -> set[int]:
    atoms: set[int] = set()
    for conj in dnf:
        atoms |= conj
    return atoms


def render_formula(dnf: frozenset, input_names: list[str]) -> str:
    conjs = sorted(dnf, key=lambda c: sorted(c))
    parts = [" ∧ ".join(input_names[i] for i in sorted(conj)) for conj in conjs]
    return " ∨ ".join(parts)


def render_pacing(p: PacingType, input_names: list[str]) -> str:
    if isinstance(p, PeriodicPacing):
        return "@" + format_frequency(p.frequency)
    if isinstance(p, EventPacing):
        only = next(iter(p.dnf)) if len(p.dnf) == 1 else None
        if only is not None and len(only) == 1:
            return "@" + input_names[next(iter(only))]
        return "@(" + render_formula(p.dnf, input_names) + ")"
    return "@constant"


def pacing_class(p: PacingType, input_names: list[str]) -> str:
    """Stable color-class key for the graph's pacing view."""
    if isinstance(p, PeriodicPacing):
        return "p:" + format_frequency(p.frequency)
    if isinstance(p, EventPacing):
        return "e:" + render_formula(p.dnf, input_names)
    return "constant"


# ---------------------------------------------------------------------------
# Aggregations


class AggFunc(Enum):
    COUNT = "count"
    SUM = "sum"
    AVG = "avg"
    MIN = "min"
    MAX = "max"


# ---------------------------------------------------------------------------
# Expressions (desugared canonical forms)


@dataclass
class Expr:
    span: Span = field(compare=False, kw_only=True)
    node_id: int = field(compare=False, kw_only=True, default=-1)


@dataclass
class IntLit(Expr):
    value: int  # no decimal point/exponent in the source: type-polymorphic


@dataclass
class FloatLit(Expr):
    value: float


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class StringLit(Expr):
    value: str


@dataclass
class StreamRef(Expr):
    """Synchronous access to a stream's current value."""

    name: str


@dataclass
class OffsetAccess(Expr):
    name: str
    offset: int  # strictly negative
    default: Expr


@dataclass
class HoldAccess(Expr):
    name: str
    default: Expr


@dataclass
class WindowAccess(Expr):
    name: str
    duration: Fraction  # seconds, > 0
    agg: AggFunc
    default: Expr | None


@dataclass
class Unary(Expr):
    op: str  # "-" | "!"
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class IfThenElse(Expr):
    condition: Expr
    then_branch: Expr
    else_branch: Expr


@dataclass
class FnCall(Expr):
    func: str
    args: list[Expr]


@dataclass
class TupleExpr(Expr):
    elements: list[Expr]  # arity >= 2


@dataclass
class TupleProj(Expr):
    operand: Expr
    index: int


# ---------------------------------------------------------------------------
# Pacing annotations (surface form, pre-resolution)


@dataclass
class ActIdent:
    name: str
    span: Span = field(compare=False, kw_only=True)


@dataclass
class ActAnd:
    left: ActExpr
    right: ActExpr
    span: Span = field(compare=False, kw_only=True)


@dataclass
class ActOr:
    left: ActExpr
    right: ActExpr
    span: Span = field(compare=False, kw_only=True)


ActExpr = ActIdent | ActAnd | ActOr


@dataclass
class FreqAnnotation:
    frequency: Fraction  # Hz
    span: Span = field(compare=False, kw_only=True)


@dataclass
class ActivationAnnotation:
    formula: ActIdent | ActAnd | ActOr
    span: Span = field(compare=False, kw_only=True)


PacingAnnotation = FreqAnnotation | ActivationAnnotation


# ---------------------------------------------------------------------------
# Declarations


@dataclass
class InputDecl:
    name: str
    value_type: ValueType
    span: Span = field(compare=False, kw_only=True)
    name_span: Span = field(compare=False, kw_only=True)


@dataclass
class OutputDecl:
    name: str
    value_type_annotation: ValueType | None
    pacing_annotation: FreqAnnotation | ActivationAnnotation | None
    expression: Expr
    span: Span = field(compare=False, kw_only=True)
    name_span: Span = field(compare=False, kw_only=True)


@dataclass
class TriggerDecl:
    condition: Expr
    message: str | None
    span: Span = field(compare=False, kw_only=True)


@dataclass
class Specification:
    inputs: list[InputDecl]
    outputs: list[OutputDecl]
    triggers: list[TriggerDecl]
    source_text: str = field(compare=False, default="")

    def stream_ids(self) -> list[StreamId]:
        return (
            [StreamId(StreamKind.INPUT, i) for i in range(len(self.inputs))]
            + [StreamId(StreamKind.OUTPUT, i) for i in range(len(self.outputs))]
            + [StreamId(StreamKind.TRIGGER, i) for i in range(len(self.triggers))]
        )

    def display_name(self, sid: StreamId) -> str:
        if sid.kind is StreamKind.INPUT:
            return self.inputs[sid.index].name
        if sid.kind is StreamKind.OUTPUT:
            return self.outputs[sid.index].name
        return f"Trigger {sid.index}"

    def expression_of(self, sid: StreamId) -> Expr | None:
        if sid.kind is StreamKind.OUTPUT:
            return self.outputs[sid.index].expression
        if sid.kind is StreamKind.TRIGGER:
            return self.triggers[sid.index].condition
        return None

    def decl_span(self, sid: StreamId) -> Span:
        if sid.kind is StreamKind.INPUT:
            return self.inputs[sid.index].span
        if sid.kind is StreamKind.OUTPUT:
            return self.outputs[sid.index].span
        return self.triggers[sid.index].span


def walk(expr: Expr):
    """Pre-order traversal of an expression tree."""
    yield expr
    if isinstance(expr, (OffsetAccess, HoldAccess)):
        yield from walk(expr.default)
    elif isinstance(expr, WindowAccess):
        if expr.default is not None:
            yield from walk(expr.default)
    elif isinstance(expr, Unary):
        yield from walk(expr.operand)
    elif isinstance(expr, Binary):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, IfThenElse):
        yield from walk(expr.condition)
        yield from walk(expr.then_branch)
        yield from walk(expr.else_branch)
    elif isinstance(expr, FnCall):
        for a in expr.args:
            yield from walk(a)
    elif isinstance(expr, TupleExpr):
        for e in expr.elements:
            yield from walk(e)
    elif isinstance(expr, TupleProj):
        yield from walk(expr.operand)


# ---------------------------------------------------------------------------
# Exact decimal formatting/parsing


def parse_decimal(text: str) -> Fraction:
    """Exact decimal-to-rational conversion; raises ValueError on junk."""
    try:
        return Fraction(Decimal(text.strip()))
    except (InvalidOperation, ValueError, OverflowError) as exc:
        raise ValueError(f"not a decimal number: {text!r}") from exc


def format_decimal(value: Fraction, min_dp: int = 0) -> str | None:
    """Shortest exact decimal rendering, or None if non-terminating."""
    n, d = value.numerator, value.denominator
    twos = fives = 0
    rest = d
    while rest % 2 == 0:
        rest //= 2
        twos += 1
    while rest % 5 == 0:
        rest //= 5
        fives += 1
    if rest != 1:
        return None
    k = max(twos, fives, min_dp)
    scaled = abs(n) * 10**k // d
    digits = str(scaled).rjust(k + 1, "0")
    sign = "-" if n < 0 else ""
    if k == 0:
        return sign + digits
    int_part, frac_part = digits[:-k], digits[-k:]
    frac_part = frac_part.rstrip("0")
    if len(frac_part) < min_dp:
        frac_part = frac_part.ljust(min_dp, "0")
    return sign + int_part + ("." + frac_part if frac_part else "")


def format_time(t: Fraction) -> str:
    """Timestamp rendering: exact decimal with at least one digit after the
    point; non-terminating instants (e.g. 1/3 s from a 3 Hz deadline) are
    rendered as exact fractions."""
    dec = format_decimal(t, min_dp=1)
    return dec if dec is not None else f"{t.numerator}/{t.denominator}"


def format_frequency(f: Fraction) -> str:
    dec = format_decimal(f)
    body = dec if dec is not None else f"{f.numerator}/{f.denominator}"
    return body + "Hz"


def format_duration_secs(d: Fraction) -> str:
    dec = format_decimal(d)
    body = dec if dec is not None else f"{d.numerator}/{d.denominator}"
    return body + "s"


def duration_secs_json(d: Fraction):
    """Duration for JSON payloads: int when integral, else float."""
    if d.denominator == 1:
        return d.numerator
    return float(d)


# ---------------------------------------------------------------------------
# Pretty printer (canonical desugared surface syntax)

_BIN_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "%": 6,
}
_UNARY_PREC = 7
_POSTFIX_PREC = 8
_COMPARISON_PRECS = {3, 4}


def _prec(expr: Expr) -> int:
    if isinstance(expr, Binary):
        return _BIN_PREC[expr.op]
    if isinstance(expr, Unary):
        return _UNARY_PREC
    if isinstance(expr, IfThenElse):
        return 0
    if isinstance(expr, TupleProj):
        return _POSTFIX_PREC
    return 9  # atoms, calls, accesses, parenthesized tuples


def _escape_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_float(x: float) -> str:
    return repr(x)


def pretty_expr(expr: Expr) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, FloatLit):
        return format_float(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, StringLit):
        return _escape_string(expr.value)
    if isinstance(expr, StreamRef):
        return expr.name
    if isinstance(expr, OffsetAccess):
        return f"{expr.name}.offset(by: {expr.offset}, or: {pretty_expr(expr.default)})"
    if isinstance(expr, HoldAccess):
        return f"{expr.name}.hold(or: {pretty_expr(expr.default)})"
    if isinstance(expr, WindowAccess):
        dur = format_duration_secs(expr.duration)
        base = f"{expr.name}.aggregate(over: {dur}, using: {expr.agg.value}"
        if expr.default is not None:
            base += f", or: {pretty_expr(expr.default)}"
        return base + ")"
    if isinstance(expr, Unary):
        inner = pretty_expr(expr.operand)
        if _prec(expr.operand) < _UNARY_PREC:
            inner = f"({inner})"
        return expr.op + inner
    if isinstance(expr, Binary):
        prec = _BIN_PREC[expr.op]
        left = pretty_expr(expr.left)
        right = pretty_expr(expr.right)
        lp = _prec(expr.left)
        rp = _prec(expr.right)
        # comparisons are non-associative; everything else is left-associative
        if lp < prec or (lp == prec and prec in _COMPARISON_PRECS):
            left = f"({left})"
        if rp <= prec:
            right = f"({right})"
        return f"{left} {expr.op} {right}"
    if isinstance(expr, IfThenElse):
        return (
            f"if {pretty_expr(expr.condition)} "
            f"then {pretty_expr(expr.then_branch)} "
            f"else {pretty_expr(expr.else_branch)}"
        )
    if isinstance(expr, FnCall):
        return f"{expr.func}(" + ", ".join(pretty_expr(a) for a in expr.args) + ")"
    if isinstance(expr, TupleExpr):
        return "(" + ", ".join(pretty_expr(e) for e in expr.elements) + ")"
    if isinstance(expr, TupleProj):
        inner = pretty_expr(expr.operand)
        if _prec(expr.operand) < _POSTFIX_PREC:
            inner = f"({inner})"
        return f"{inner}.{expr.index}"
    raise TypeError(f"unknown expression node: {expr!r}")


def pretty_act(act) -> str:
    # ∨ binds looser than ∧, so only ∨ children of ∧ need parens
    if isinstance(act, ActIdent):
        return act.name
    if isinstance(act, ActAnd):
        left = pretty_act(act.left)
        right = pretty_act(act.right)
        if isinstance(act.left, ActOr):
            left = f"({left})"
        if isinstance(act.right, (ActOr, ActAnd)):
            right = f"({right})"
        return f"{left} ∧ {right}"
    if isinstance(act, ActOr):
        left = pretty_act(act.left)
        right = pretty_act(act.right)
        if isinstance(act.right, ActOr):
            right = f"({right})"
        return f"{left} ∨ {right}"
    raise TypeError(f"unknown activation node: {act!r}")


def pretty_annotation(ann) -> str:
    if isinstance(ann, FreqAnnotation):
        return "@" + format_frequency(ann.frequency)
    if isinstance(ann.formula, ActIdent):
        return "@" + ann.formula.name
    return "@(" + pretty_act(ann.formula) + ")"


def pretty(spec: Specification) -> str:
    lines: list[str] = []
    for inp in spec.inputs:
        lines.append(f"input {inp.name} : {inp.value_type.render()}")
    for out in spec.outputs:
        head = f"output {out.name}"
        if out.value_type_annotation is not None:
            head += f" : {out.value_type_annotation.render()}"
        if out.pacing_annotation is not None:
            head += f" {pretty_annotation(out.pacing_annotation)}"
        lines.append(f"{head} := {pretty_expr(out.expression)}")
    for trig in spec.triggers:
        line = f"trigger {pretty_expr(trig.condition)}"
        if trig.message is not None:
            line += f" {_escape_string(trig.message)}"
        lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")
