"""Lexer and parser producing the canonical (desugared) AST.

Spans are byte ranges.  Parsing and desugaring are fused: the only sugar in
the surface syntax is the bracket access `s[-1, d]`, rewritten to
`s.offset(by: -1, or: d)` while the postfix chain is parsed, and operator
precedence is resolved by the expression parser itself.

Error codes:
  P001 unexpected token / malformed construct
  P002 unterminated string literal
  P003 offset is not negative
  P004 unknown or missing unit
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction

from .diagnostics import Diagnostic, Severity, Span
from .lang import (
    ActAnd,
    ActIdent,
    ActivationAnnotation,
    ActOr,
    AggFunc,
    Binary,
    BoolLit,
    Expr,
    FloatLit,
    FnCall,
    FreqAnnotation,
    HoldAccess,
    IfThenElse,
    InputDecl,
    IntLit,
    OffsetAccess,
    OutputDecl,
    Specification,
    StreamRef,
    StringLit,
    TriggerDecl,
    TupleExpr,
    TupleProj,
    TupleType,
    Unary,
    ValueType,
    VTYPE_ALIASES,
    WindowAccess,
    walk,
)

KEYWORDS = {"input", "output", "trigger", "if", "then", "else", "true", "false"}

FREQ_UNITS = {"mHz": Fraction(1, 1000), "Hz": Fraction(1), "kHz": Fraction(1000)}
DUR_UNITS = {"ms": Fraction(1, 1000), "s": Fraction(1), "min": Fraction(60), "h": Fraction(3600)}

_TWO_CHAR_OPS = (":=", "==", "!=", "<=", ">=", "&&", "||")
_ONE_CHAR_OPS = set("+-*/%<>!():,[].@") | {"∧", "∨"}


@dataclass
class Token:
    kind: str  # ident | kw | int | float | string | op | eof
    text: str
    span: Span
    value: object = None


class _Lexer:
    def __init__(self, source: str) -> None:
        self.src = source
        self.n = len(source)
        self.i = 0
        self.diags: list[Diagnostic] = []
        # byte offset of each character (plus EOF sentinel)
        offs = [0] * (self.n + 1)
        pos = 0
        for idx, ch in enumerate(source):
            offs[idx] = pos
            pos += len(ch.encode("utf-8"))
        offs[self.n] = pos
        self._byte = offs

    def _span(self, start_char: int, end_char: int) -> Span:
        return Span(self._byte[start_char], self._byte[end_char])

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        src, n = self.src, self.n
        while self.i < n:
            ch = src[self.i]
            if ch in " \t\r\n":
                self.i += 1
                continue
            if ch == "/" and self.i + 1 < n and src[self.i + 1] == "/":
                while self.i < n and src[self.i] != "\n":
                    self.i += 1
                continue
            start = self.i
            if ch.isdigit():
                after_dot = bool(out) and out[-1].kind == "op" and out[-1].text == "."
                out.append(self._number(allow_fraction=not after_dot))
                continue
            if ch.isalpha() or ch == "_":
                while self.i < n and (src[self.i].isalnum() or src[self.i] == "_"):
                    self.i += 1
                text = src[start : self.i]
                kind = "kw" if text in KEYWORDS else "ident"
                out.append(Token(kind, text, self._span(start, self.i)))
                continue
            if ch == '"':
                out.append(self._string())
                continue
            two = src[self.i : self.i + 2]
            if two in _TWO_CHAR_OPS:
                self.i += 2
                out.append(Token("op", two, self._span(start, self.i)))
                continue
            if ch in _ONE_CHAR_OPS:
                self.i += 1
                out.append(Token("op", ch, self._span(start, self.i)))
                continue
            self.i += 1
            self.diags.append(
                Diagnostic(
                    "P001",
                    Severity.ERROR,
                    f"unexpected character {ch!r}",
                    self._span(start, self.i),
                )
            )
        out.append(Token("eof", "", self._span(n, n)))
        return out

    def _number(self, allow_fraction: bool) -> Token:
        src, n = self.src, self.n
        start = self.i
        while self.i < n and src[self.i].isdigit():
            self.i += 1
        is_float = False
        if (
            allow_fraction
            and self.i + 1 < n
            and src[self.i] == "."
            and src[self.i + 1].isdigit()
        ):
            is_float = True
            self.i += 1
            while self.i < n and src[self.i].isdigit():
                self.i += 1
        if allow_fraction and self.i < n and src[self.i] in "eE":
            j = self.i + 1
            if j < n and src[j] in "+-":
                j += 1
            if j < n and src[j].isdigit():
                is_float = True
                self.i = j
                while self.i < n and src[self.i].isdigit():
                    self.i += 1
        text = src[start : self.i]
        span = self._span(start, self.i)
        if is_float:
            return Token("float", text, span, value=float(text))
        return Token("int", text, span, value=int(text))

    def _string(self) -> Token:
        src, n = self.src, self.n
        start = self.i
        self.i += 1  # opening quote
        chars: list[str] = []
        while self.i < n:
            ch = src[self.i]
            if ch == '"':
                self.i += 1
                return Token("string", src[start : self.i], self._span(start, self.i), value="".join(chars))
            if ch == "\n":
                break
            if ch == "\\" and self.i + 1 < n:
                esc = src[self.i + 1]
                mapped = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}.get(esc)
                if mapped is not None:
                    chars.append(mapped)
                    self.i += 2
                    continue
            chars.append(ch)
            self.i += 1
        span = self._span(start, self.i)
        self.diags.append(Diagnostic("P002", Severity.ERROR, "unterminated string literal", span))
        return Token("string", src[start : self.i], span, value="".join(chars))


# ---------------------------------------------------------------------------


class _ParseError(Exception):
    def __init__(self, diag: Diagnostic) -> None:
        super().__init__(diag.message)
        self.diag = diag


@dataclass
class ParseResult:
    spec: Specification | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.spec is not None


BIN_PRECEDENCE = {
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
_NON_ASSOC_LEVELS = {3, 4}


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.toks = tokens
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, message: str, span: Span | None = None, code: str = "P001") -> _ParseError:
        return _ParseError(Diagnostic(code, Severity.ERROR, message, span or self.peek().span))

    def expect_op(self, text: str) -> Token:
        if self.at("op", text):
            return self.advance()
        raise self.error(f"expected '{text}', found {self._describe(self.peek())}")

    def expect_ident(self, what: str) -> Token:
        if self.at("ident"):
            return self.advance()
        if self.at("kw"):
            raise self.error(f"'{self.peek().text}' is a reserved word and cannot be used as {what}")
        raise self.error(f"expected {what}, found {self._describe(self.peek())}")

    @staticmethod
    def _describe(tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else f"'{tok.text}'"

    # -- declarations -------------------------------------------------------

    def parse_spec(self) -> tuple[Specification, list[Diagnostic]]:
        inputs: list[InputDecl] = []
        outputs: list[OutputDecl] = []
        triggers: list[TriggerDecl] = []
        diags: list[Diagnostic] = []
        while not self.at("eof"):
            if not self.at("kw") or self.peek().text not in ("input", "output", "trigger"):
                diags.append(
                    Diagnostic(
                        "P001",
                        Severity.ERROR,
                        f"expected a declaration (input, output, or trigger), found {self._describe(self.peek())}",
                        self.peek().span,
                    )
                )
                self._recover()
                continue
            try:
                kw = self.advance()
                if kw.text == "input":
                    inputs.append(self._input_decl(kw))
                elif kw.text == "output":
                    outputs.append(self._output_decl(kw))
                else:
                    triggers.append(self._trigger_decl(kw))
            except _ParseError as exc:
                diags.append(exc.diag)
                self._recover()
        return Specification(inputs, outputs, triggers), diags

    def _recover(self) -> None:
        while not self.at("eof"):
            if self.at("kw") and self.peek().text in ("input", "output", "trigger"):
                return
            self.advance()

    def _input_decl(self, kw: Token) -> InputDecl:
        name = self.expect_ident("a stream name")
        self.expect_op(":")
        vtype, vspan = self._vtype()
        return InputDecl(
            name.text, vtype, span=kw.span.join(vspan), name_span=name.span
        )

    def _output_decl(self, kw: Token) -> OutputDecl:
        name = self.expect_ident("a stream name")
        vtype = None
        if self.at("op", ":"):
            self.advance()
            vtype, _ = self._vtype()
        pacing = None
        if self.at("op", "@"):
            pacing = self._pacing_annotation()
        self.expect_op(":=")
        expression = self.parse_expr()
        return OutputDecl(
            name.text,
            vtype,
            pacing,
            expression,
            span=kw.span.join(expression.span),
            name_span=name.span,
        )

    def _trigger_decl(self, kw: Token) -> TriggerDecl:
        condition = self.parse_expr()
        message = None
        end_span = condition.span
        if self.at("string"):
            tok = self.advance()
            message = tok.value
            end_span = tok.span
        return TriggerDecl(condition, message, span=kw.span.join(end_span))

    def _vtype(self) -> tuple[ValueType, Span]:
        if self.at("op", "("):
            open_tok = self.advance()
            elems = [self._vtype()[0]]
            self.expect_op(",")
            elems.append(self._vtype()[0])
            while self.at("op", ","):
                self.advance()
                elems.append(self._vtype()[0])
            close = self.expect_op(")")
            return TupleType(tuple(elems)), open_tok.span.join(close.span)
        tok = self.expect_ident("a type name")
        vt = VTYPE_ALIASES.get(tok.text)
        if vt is None:
            raise self.error(f"unknown type '{tok.text}'", tok.span)
        return vt, tok.span

    # -- pacing annotations --------------------------------------------------

    def _pacing_annotation(self) -> FreqAnnotation | ActivationAnnotation:
        at_tok = self.expect_op("@")
        if self.at("int") or self.at("float"):
            num = self.advance()
            freq = _exact_number(num)
            unit = self._unit(FREQ_UNITS, "frequency unit (mHz, Hz, kHz)")
            value = freq * FREQ_UNITS[unit.text]
            if value <= 0:
                raise self.error("frequency must be positive", num.span.join(unit.span))
            return FreqAnnotation(value, span=at_tok.span.join(unit.span))
        if self.at("op", "("):
            self.advance()
            formula = self._act_or()
            close = self.expect_op(")")
            return ActivationAnnotation(formula, span=at_tok.span.join(close.span))
        tok = self.expect_ident("a frequency or an input name")
        return ActivationAnnotation(
            ActIdent(tok.text, span=tok.span), span=at_tok.span.join(tok.span)
        )

    def _unit(self, table: dict, what: str) -> Token:
        if self.at("ident"):
            tok = self.peek()
            if tok.text in table:
                return self.advance()
            self.advance()
            raise self.error(f"unknown unit '{tok.text}', expected {what}", tok.span, code="P004")
        raise self.error(f"expected {what}, found {self._describe(self.peek())}", code="P004")

    def _act_or(self):
        left = self._act_and()
        while self.at("op", "∨") or self.at("op", "||"):
            op = self.advance()
            right = self._act_and()
            left = ActOr(left, right, span=left.span.join(op.span).join(right.span))
        return left

    def _act_and(self):
        left = self._act_atom()
        while self.at("op", "∧") or self.at("op", "&&"):
            op = self.advance()
            right = self._act_atom()
            left = ActAnd(left, right, span=left.span.join(op.span).join(right.span))
        return left

    def _act_atom(self):
        if self.at("op", "("):
            self.advance()
            inner = self._act_or()
            self.expect_op(")")
            return inner
        tok = self.expect_ident("an input name")
        return ActIdent(tok.text, span=tok.span)

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> Expr:
        if self.at("kw", "if"):
            start = self.advance()
            condition = self.parse_expr()
            if not (self.at("kw", "then")):
                raise self.error(f"expected 'then', found {self._describe(self.peek())}")
            self.advance()
            then_branch = self.parse_expr()
            if not (self.at("kw", "else")):
                raise self.error(f"expected 'else', found {self._describe(self.peek())}")
            self.advance()
            else_branch = self.parse_expr()
            return IfThenElse(
                condition,
                then_branch,
                else_branch,
                span=start.span.join(else_branch.span),
            )
        return self._binary(1)

    def _binary(self, min_prec: int) -> Expr:
        left = self._unary()
        while True:
            tok = self.peek()
            if tok.kind != "op":
                break
            prec = BIN_PRECEDENCE.get(tok.text)
            if prec is None or prec < min_prec:
                break
            self.advance()
            right = self._binary(prec + 1)
            left = Binary(tok.text, left, right, span=left.span.join(right.span))
            nxt = self.peek()
            if (
                prec in _NON_ASSOC_LEVELS
                and nxt.kind == "op"
                and BIN_PRECEDENCE.get(nxt.text) == prec
            ):
                raise self.error(
                    f"comparison operators are non-associative; parenthesize one side of '{nxt.text}'",
                    nxt.span,
                )
        return left

    def _unary(self) -> Expr:
        if self.at("op", "-") or self.at("op", "!"):
            tok = self.advance()
            operand = self._unary()
            return Unary(tok.text, operand, span=tok.span.join(operand.span))
        return self._postfix()

    def _postfix(self) -> Expr:
        expr = self._primary()
        while True:
            if self.at("op", "."):
                self.advance()
                expr = self._postfix_dot(expr)
            elif self.at("op", "["):
                expr = self._bracket_access(expr)
            else:
                return expr

    def _postfix_dot(self, expr: Expr) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return TupleProj(expr, tok.value, span=expr.span.join(tok.span))
        if tok.kind == "ident" and tok.text in ("offset", "hold", "aggregate"):
            if not isinstance(expr, StreamRef):
                raise self.error(
                    f"'.{tok.text}' applies to a stream name, not a general expression",
                    tok.span,
                )
            self.advance()
            return self._access(expr, tok.text)
        raise self.error(
            f"expected a tuple index or an access method (offset, hold, aggregate) after '.', "
            f"found {self._describe(tok)}"
        )

    def _named_arg(self, label: str) -> None:
        tok = self.peek()
        if tok.kind == "ident" and tok.text == label:
            self.advance()
            self.expect_op(":")
            return
        raise self.error(f"expected '{label}:', found {self._describe(tok)}")

    def _signed_int(self) -> tuple[int, Span]:
        neg = None
        if self.at("op", "-"):
            neg = self.advance()
        if not self.at("int"):
            raise self.error(f"expected an integer offset, found {self._describe(self.peek())}")
        tok = self.advance()
        value = -tok.value if neg else tok.value
        span = tok.span if neg is None else neg.span.join(tok.span)
        return value, span

    def _access(self, target: StreamRef, method: str) -> Expr:
        self.expect_op("(")
        if method == "offset":
            self._named_arg("by")
            offset, off_span = self._signed_int()
            if offset >= 0:
                raise _ParseError(
                    Diagnostic(
                        "P003",
                        Severity.ERROR,
                        f"offset must be negative (a past value), found {offset}",
                        off_span,
                    )
                )
            self.expect_op(",")
            self._named_arg("or")
            default = self.parse_expr()
            close = self.expect_op(")")
            return OffsetAccess(
                target.name, offset, default, span=target.span.join(close.span)
            )
        if method == "hold":
            self._named_arg("or")
            default = self.parse_expr()
            close = self.expect_op(")")
            return HoldAccess(target.name, default, span=target.span.join(close.span))
        # aggregate
        self._named_arg("over")
        if not (self.at("int") or self.at("float")):
            raise self.error(f"expected a duration, found {self._describe(self.peek())}")
        num = self.advance()
        unit = self._unit(DUR_UNITS, "duration unit (ms, s, min, h)")
        duration = _exact_number(num) * DUR_UNITS[unit.text]
        self.expect_op(",")
        self._named_arg("using")
        agg_tok = self.expect_ident("an aggregation function (count, sum, avg, min, max)")
        try:
            agg = AggFunc(agg_tok.text)
        except ValueError:
            raise self.error(
                f"unknown aggregation function '{agg_tok.text}'", agg_tok.span
            ) from None
        default = None
        if self.at("op", ","):
            self.advance()
            self._named_arg("or")
            default = self.parse_expr()
        close = self.expect_op(")")
        return WindowAccess(
            target.name, duration, agg, default, span=target.span.join(close.span)
        )

    def _bracket_access(self, expr: Expr) -> Expr:
        open_tok = self.expect_op("[")
        if not isinstance(expr, StreamRef):
            raise self.error(
                "offset access '[k, default]' applies to a stream name, not a general expression",
                open_tok.span,
            )
        offset, off_span = self._signed_int()
        if offset >= 0:
            raise _ParseError(
                Diagnostic(
                    "P003",
                    Severity.ERROR,
                    f"offset must be negative (a past value), found {offset}",
                    off_span,
                )
            )
        self.expect_op(",")
        default = self.parse_expr()
        close = self.expect_op("]")
        return OffsetAccess(expr.name, offset, default, span=expr.span.join(close.span))

    def _primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return IntLit(tok.value, span=tok.span)
        if tok.kind == "float":
            self.advance()
            return FloatLit(tok.value, span=tok.span)
        if tok.kind == "string":
            self.advance()
            return StringLit(tok.value, span=tok.span)
        if tok.kind == "kw" and tok.text in ("true", "false"):
            self.advance()
            return BoolLit(tok.text == "true", span=tok.span)
        if tok.kind == "ident":
            self.advance()
            if self.at("op", "("):
                self.advance()
                args = []
                if not self.at("op", ")"):
                    args.append(self.parse_expr())
                    while self.at("op", ","):
                        self.advance()
                        args.append(self.parse_expr())
                close = self.expect_op(")")
                return FnCall(tok.text, args, span=tok.span.join(close.span))
            return StreamRef(tok.text, span=tok.span)
        if tok.kind == "op" and tok.text == "(":
            open_tok = self.advance()
            first = self.parse_expr()
            if self.at("op", ","):
                elems = [first]
                while self.at("op", ","):
                    self.advance()
                    elems.append(self.parse_expr())
                close = self.expect_op(")")
                return TupleExpr(elems, span=open_tok.span.join(close.span))
            close = self.expect_op(")")
            # keep the parenthesized extent so nested spans stay well-ordered
            first.span = open_tok.span.join(close.span)
            return first
        raise self.error(f"expected an expression, found {self._describe(tok)}")


def _exact_number(tok: Token) -> Fraction:
    try:
        return Fraction(Decimal(tok.text))
    except InvalidOperation:  # pragma: no cover - lexer only emits valid numbers
        raise ValueError(f"bad number token {tok.text!r}") from None


def _assign_node_ids(spec: Specification) -> None:
    counter = 0
    for out in spec.outputs:
        for node in walk(out.expression):
            node.node_id = counter
            counter += 1
    for trig in spec.triggers:
        for node in walk(trig.condition):
            node.node_id = counter
            counter += 1


def parse(source: str) -> ParseResult:
    lexer = _Lexer(source)
    tokens = lexer.tokens()
    parser = _Parser(tokens)
    spec, parse_diags = parser.parse_spec()
    diags = lexer.diags + parse_diags
    diags.sort(key=lambda d: (d.span.start, d.span.end, d.code))
    if diags:
        return ParseResult(None, diags)
    spec.source_text = source
    _assign_node_ids(spec)
    return ParseResult(spec, [])
