"""Value-type analysis: bottom-up inference with unification.

Integer literals are polymorphic over {Int64, UInt64, Float64} (restricted by
their magnitude and by unary minus), resolved by unification against their
context and defaulting to Int64.  There are no implicit coercions: arithmetic
requires identical numeric operand types, comparisons yield Bool, `abs` maps
a numeric type to itself.  Aggregations: count yields UInt64, avg yields
Float64, sum/min/max preserve the target type (E012 for non-numeric targets).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from rill.diagnostics import Diagnostic, Severity, Span
from rill.lang import (
    AggFunc,
    Binary,
    BoolLit,
    Expr,
    FloatLit,
    FnCall,
    HoldAccess,
    IfThenElse,
    IntLit,
    OffsetAccess,
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
    BOOL,
    FLOAT64,
    INT64,
    INT64_MAX,
    INT64_MIN,
    STRING,
    UINT64,
    UINT64_MAX,
    is_numeric,
)

from .naming import NameTable

_NUMERIC = frozenset({INT64, UINT64, FLOAT64})
_SIGNED = frozenset({INT64, FLOAT64})


class _TypeNode:
    __slots__ = ("parent", "concrete", "elems", "cands")

    def __init__(self, concrete=None, elems=None, cands=None):
        self.parent: _TypeNode | None = None
        self.concrete: ValueType | None = concrete  # scalar types only
        self.elems: list[_TypeNode] | None = elems
        self.cands: frozenset | None = cands

    def find(self) -> _TypeNode:
        node = self
        while node.parent is not None:
            node = node.parent
        # path compression
        cur = self
        while cur.parent is not None:
            cur.parent, cur = node, cur.parent
        return node


def _node_for(vt: ValueType) -> _TypeNode:
    if isinstance(vt, TupleType):
        return _TypeNode(elems=[_node_for(e) for e in vt.elements])
    return _TypeNode(concrete=vt)


def _render(node: _TypeNode) -> str:
    node = node.find()
    if node.concrete is not None:
        return node.concrete.render()
    if node.elems is not None:
        return "(" + ", ".join(_render(e) for e in node.elems) + ")"
    if node.cands is not None:
        if node.cands == _NUMERIC:
            return "a numeric type"
        names = sorted(c.render() for c in node.cands)
        return " or ".join(names)
    return "an unconstrained type"


def _occurs(needle: _TypeNode, hay: _TypeNode) -> bool:
    hay = hay.find()
    if hay is needle:
        return True
    if hay.elems is not None:
        return any(_occurs(needle, e) for e in hay.elems)
    return False


@dataclass
class ValueTypes:
    streams: dict[StreamId, ValueType] = field(default_factory=dict)
    nodes: dict[int, ValueType] = field(default_factory=dict)


class _Inference:
    def __init__(self, spec: Specification, table: NameTable) -> None:
        self.spec = spec
        self.table = table
        self.diags: list[Diagnostic] = []
        self.node_of: dict[int, _TypeNode] = {}  # expr node id -> type node
        self.stream_node: dict[StreamId, _TypeNode] = {}
        self.pending_projs: list[tuple[TupleProj, _TypeNode, _TypeNode]] = []

    # -- unification --------------------------------------------------------

    def mismatch(self, expected: _TypeNode, found: _TypeNode, span: Span, code: str = "E010"):
        if code == "E011":
            msg = f"trigger condition must be Bool, found {_render(found)}"
        else:
            msg = f"type mismatch: expected {_render(expected)}, found {_render(found)}"
        self.diags.append(Diagnostic(code, Severity.ERROR, msg, span))

    def unify(self, expected: _TypeNode, found: _TypeNode, span: Span, code: str = "E010") -> bool:
        a, b = expected.find(), found.find()
        if a is b:
            return True
        if a.concrete is not None and b.concrete is not None:
            if a.concrete == b.concrete:
                b.parent = a
                return True
            self.mismatch(a, b, span, code)
            return False
        if a.elems is not None and b.elems is not None:
            if len(a.elems) != len(b.elems):
                self.mismatch(a, b, span, code)
                return False
            ok = all(
                self.unify(ea, eb, span, code) for ea, eb in zip(a.elems, b.elems)
            )
            b.parent = a
            return ok
        # scalar vs tuple shapes never unify
        if (a.concrete is not None and b.elems is not None) or (
            a.elems is not None and b.concrete is not None
        ):
            self.mismatch(a, b, span, code)
            return False
        if a.cands is not None and b.concrete is not None:
            if b.concrete in a.cands:
                a.concrete, a.cands = b.concrete, None
                b.parent = a
                return True
            self.mismatch(a, b, span, code)
            return False
        if b.cands is not None and a.concrete is not None:
            if a.concrete in b.cands:
                b.parent = a
                return True
            self.mismatch(a, b, span, code)
            return False
        if a.cands is not None and b.cands is not None:
            inter = a.cands & b.cands
            if not inter:
                self.mismatch(a, b, span, code)
                return False
            a.cands = inter
            b.parent = a
            return True
        if a.cands is not None and b.elems is not None:
            self.mismatch(a, b, span, code)
            return False
        if b.cands is not None and a.elems is not None:
            self.mismatch(a, b, span, code)
            return False
        # at least one side fully unconstrained
        if a.concrete is None and a.elems is None and a.cands is None:
            if b.elems is not None and _occurs(a, b):
                self.diags.append(
                    Diagnostic("E010", Severity.ERROR, "recursive type", span)
                )
                return False
            a.parent = b
            return True
        if b.elems is not None and _occurs(a, b) or a.elems is not None and _occurs(b, a):
            self.diags.append(Diagnostic("E010", Severity.ERROR, "recursive type", span))
            return False
        b.parent = a
        return True

    # -- constraint generation ----------------------------------------------

    def infer(self, expr: Expr) -> _TypeNode:
        node = self._infer(expr)
        self.node_of[expr.node_id] = node
        return node

    def _target_node(self, expr) -> _TypeNode:
        target = self.table.resolution.get(expr.node_id)
        if target is None:  # unresolved name: naming already reported it
            return _TypeNode()
        return self.stream_node[target]

    def _infer(self, expr: Expr) -> _TypeNode:
        if isinstance(expr, IntLit):
            cands = frozenset(
                t
                for t in _NUMERIC
                if (t is FLOAT64)
                or (t is INT64 and INT64_MIN <= expr.value <= INT64_MAX)
                or (t is UINT64 and 0 <= expr.value <= UINT64_MAX)
            )
            return _TypeNode(cands=cands)
        if isinstance(expr, FloatLit):
            return _TypeNode(concrete=FLOAT64)
        if isinstance(expr, BoolLit):
            return _TypeNode(concrete=BOOL)
        if isinstance(expr, StringLit):
            return _TypeNode(concrete=STRING)
        if isinstance(expr, StreamRef):
            return self._target_node(expr)
        if isinstance(expr, (OffsetAccess, HoldAccess)):
            target = self._target_node(expr)
            dflt = self.infer(expr.default)
            self.unify(target, dflt, expr.default.span)
            return target
        if isinstance(expr, WindowAccess):
            return self._infer_window(expr)
        if isinstance(expr, Unary):
            operand = self.infer(expr.operand)
            if expr.op == "!":
                self.unify(_TypeNode(concrete=BOOL), operand, expr.operand.span)
                return _TypeNode(concrete=BOOL)
            self.unify(_TypeNode(cands=_SIGNED), operand, expr.span)
            return operand
        if isinstance(expr, Binary):
            return self._infer_binary(expr)
        if isinstance(expr, IfThenElse):
            cond = self.infer(expr.condition)
            self.unify(_TypeNode(concrete=BOOL), cond, expr.condition.span)
            then = self.infer(expr.then_branch)
            other = self.infer(expr.else_branch)
            self.unify(then, other, expr.else_branch.span)
            return then
        if isinstance(expr, FnCall):
            args = [self.infer(a) for a in expr.args]
            if expr.func != "abs":  # E003 already reported by naming
                return _TypeNode()
            if len(args) != 1:
                self.diags.append(
                    Diagnostic(
                        "E010",
                        Severity.ERROR,
                        f"abs expects exactly 1 argument, found {len(args)}",
                        expr.span,
                    )
                )
                return _TypeNode()
            self.unify(_TypeNode(cands=_NUMERIC), args[0], expr.args[0].span)
            return args[0]
        if isinstance(expr, TupleExpr):
            return _TypeNode(elems=[self.infer(e) for e in expr.elements])
        if isinstance(expr, TupleProj):
            operand = self.infer(expr.operand)
            result = _TypeNode()
            self.pending_projs.append((expr, operand, result))
            return result
        raise TypeError(f"unknown expression node {expr!r}")

    def _infer_window(self, expr: WindowAccess) -> _TypeNode:
        target = self._target_node(expr)
        if expr.agg is not AggFunc.COUNT:
            rep = target.find()
            if (rep.concrete is not None and not is_numeric(rep.concrete)) or rep.elems is not None:
                self.diags.append(
                    Diagnostic(
                        "E012",
                        Severity.ERROR,
                        f"aggregation '{expr.agg.value}' requires a numeric target, "
                        f"found {_render(rep)}",
                        expr.span,
                    )
                )
            else:
                self.unify(_TypeNode(cands=_NUMERIC), target, expr.span)
        if expr.agg is AggFunc.COUNT:
            result = _TypeNode(concrete=UINT64)
        elif expr.agg is AggFunc.AVG:
            result = _TypeNode(concrete=FLOAT64)
        else:
            result = target
        if expr.default is not None:
            dflt = self.infer(expr.default)
            self.unify(result, dflt, expr.default.span)
        elif expr.agg in (AggFunc.AVG, AggFunc.MIN, AggFunc.MAX):
            self.diags.append(
                Diagnostic(
                    "W001",
                    Severity.WARNING,
                    f"aggregation '{expr.agg.value}' over an empty window yields the "
                    "type's zero value; add 'or:' to choose the default explicitly",
                    expr.span,
                )
            )
        return result

    def _infer_binary(self, expr: Binary) -> _TypeNode:
        left = self.infer(expr.left)
        right = self.infer(expr.right)
        op = expr.op
        if op in ("&&", "||"):
            self.unify(_TypeNode(concrete=BOOL), left, expr.left.span)
            self.unify(_TypeNode(concrete=BOOL), right, expr.right.span)
            return _TypeNode(concrete=BOOL)
        if op in ("==", "!="):
            self.unify(left, right, expr.right.span)
            return _TypeNode(concrete=BOOL)
        if op in ("<", "<=", ">", ">="):
            self.unify(left, right, expr.right.span)
            self.unify(_TypeNode(cands=_NUMERIC), left, expr.left.span)
            return _TypeNode(concrete=BOOL)
        self.unify(left, right, expr.right.span)
        self.unify(_TypeNode(cands=_NUMERIC), left, expr.span)
        return left

    # -- pending tuple projections -------------------------------------------

    def resolve_projections(self) -> None:
        pending = self.pending_projs
        while pending:
            progressed = False
            remaining = []
            for item in pending:
                expr, operand, result = item
                rep = operand.find()
                if rep.elems is not None:
                    if not 0 <= expr.index < len(rep.elems):
                        self.diags.append(
                            Diagnostic(
                                "E010",
                                Severity.ERROR,
                                f"tuple index {expr.index} out of range for {_render(rep)}",
                                expr.span,
                            )
                        )
                    else:
                        self.unify(result, rep.elems[expr.index], expr.span)
                    progressed = True
                elif rep.concrete is not None or rep.cands is not None:
                    self.diags.append(
                        Diagnostic(
                            "E010",
                            Severity.ERROR,
                            f"type mismatch: expected a tuple, found {_render(rep)}",
                            expr.span,
                        )
                    )
                    progressed = True
                else:
                    remaining.append(item)
            if not progressed:
                for expr, _operand, _result in remaining:
                    self.diags.append(
                        Diagnostic(
                            "E010",
                            Severity.ERROR,
                            "cannot determine the tuple shape being projected",
                            expr.span,
                        )
                    )
                return
            pending = remaining
        self.pending_projs = []

    # -- defaulting ----------------------------------------------------------

    def resolve(self, node: _TypeNode) -> ValueType:
        rep = node.find()
        if rep.concrete is not None:
            return rep.concrete
        if rep.elems is not None:
            return TupleType(tuple(self.resolve(e) for e in rep.elems))
        if rep.cands is not None:
            for preferred in (INT64, UINT64, FLOAT64):
                if preferred in rep.cands:
                    # bind so aliased nodes resolve identically
                    rep.concrete, rep.cands = preferred, None
                    return preferred
        rep.concrete = INT64
        return INT64


def value_type_analysis(
    spec: Specification, table: NameTable
) -> tuple[ValueTypes, list[Diagnostic]]:
    inf = _Inference(spec, table)

    for i, inp in enumerate(spec.inputs):
        inf.stream_node[StreamId(StreamKind.INPUT, i)] = _node_for(inp.value_type)
    for i, out in enumerate(spec.outputs):
        node = _TypeNode()
        if out.value_type_annotation is not None:
            node = _node_for(out.value_type_annotation)
        inf.stream_node[StreamId(StreamKind.OUTPUT, i)] = node
    for i in range(len(spec.triggers)):
        inf.stream_node[StreamId(StreamKind.TRIGGER, i)] = _TypeNode(concrete=BOOL)

    for i, out in enumerate(spec.outputs):
        sid = StreamId(StreamKind.OUTPUT, i)
        inferred = inf.infer(out.expression)
        inf.unify(inf.stream_node[sid], inferred, out.expression.span)
    for i, trig in enumerate(spec.triggers):
        inferred = inf.infer(trig.condition)
        inf.unify(_TypeNode(concrete=BOOL), inferred, trig.condition.span, code="E011")

    inf.resolve_projections()

    result = ValueTypes()
    for sid in spec.stream_ids():
        result.streams[sid] = inf.resolve(inf.stream_node[sid])
    for node_id, tnode in inf.node_of.items():
        result.nodes[node_id] = inf.resolve(tnode)
    return result, inf.diags
