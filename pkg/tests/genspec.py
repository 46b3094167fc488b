"""Seeded random generators for specifications and traces.

The differential suites lean on these helpers: `gen_event_spec` produces
small event-based specifications (no windows, offsets up to 3) whose
analysis is guaranteed clean, `gen_window_spec` produces single-window
periodic specifications, and `gen_trace` produces weakly-monotonic event
lists matching a lowered program.  Everything is driven by an explicit
`random.Random` so failures reproduce from the seed alone.
"""

from __future__ import annotations

import random
from fractions import Fraction

from rill import lang
from rill.analysis import run_all
from rill.interpreter import Event

NUMERIC = ("Int64", "UInt64", "Float64")
SCALARS = NUMERIC + ("Bool",)

_CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


def _literal(rng: random.Random, ty: str) -> str:
    if ty == "Bool":
        return rng.choice(("true", "false"))
    if ty == "Float64":
        return repr(round(rng.uniform(-50.0, 50.0), 3))
    if ty == "UInt64":
        return str(rng.randint(0, 20))
    return str(rng.randint(-20, 20))


class _ExprGen:
    """Type-directed expression generator over an environment of streams.

    `env` holds (name, type) pairs that may be referenced synchronously;
    `self_name`/`self_type` allow offset access to the stream being
    defined (the running-counter idiom).  `anchored` records whether the
    produced expression contains at least one synchronous or offset
    access, which the pacing rules require of every output.
    """

    def __init__(self, rng, env, self_name=None, self_type=None):
        self.rng = rng
        self.env = env
        self.self_name = self_name
        self.self_type = self_type
        self.anchored = False

    def _same(self, ty):
        return [n for n, t in self.env if t == ty]

    def _sync(self, ty):
        name = self.rng.choice(self._same(ty))
        self.anchored = True
        return name

    def _offset(self, ty):
        names = list(self._same(ty))
        if self.self_name is not None and self.self_type == ty:
            names.append(self.self_name)
        name = self.rng.choice(names)
        k = self.rng.randint(1, 3)
        self.anchored = True
        return f"{name}.offset(by: -{k}, or: {_literal(self.rng, ty)})"

    def _hold(self, ty):
        name = self.rng.choice(self._same(ty))
        return f"{name}.hold(or: {_literal(self.rng, ty)})"

    def _leaf(self, ty):
        rng = self.rng
        kinds = ["lit"]
        if self._same(ty):
            kinds += ["sync", "sync", "sync", "offset", "hold"]
        elif self.self_name is not None and self.self_type == ty:
            kinds.append("offset")
        kind = rng.choice(kinds)
        if kind == "sync":
            return self._sync(ty)
        if kind == "offset":
            return self._offset(ty)
        if kind == "hold":
            return self._hold(ty)
        return _literal(rng, ty)

    def gen(self, ty: str, depth: int) -> str:
        rng = self.rng
        if depth <= 0 or rng.random() < 0.25:
            return self._leaf(ty)
        if ty == "Bool":
            kind = rng.choice(("cmp", "cmp", "logic", "not", "ite", "leaf"))
            if kind == "cmp":
                cty = rng.choice(NUMERIC)
                if not self._same(cty):
                    cty = rng.choice([t for t in NUMERIC if self._same(t)] or [cty])
                op = rng.choice(_CMP_OPS)
                return f"({self.gen(cty, depth - 1)} {op} {self.gen(cty, depth - 1)})"
            if kind == "logic":
                op = rng.choice(("&&", "||"))
                return f"({self.gen('Bool', depth - 1)} {op} {self.gen('Bool', depth - 1)})"
            if kind == "not":
                return f"(!{self.gen('Bool', depth - 1)})"
            if kind == "ite":
                return (
                    f"(if {self.gen('Bool', depth - 1)} "
                    f"then {self.gen('Bool', depth - 1)} "
                    f"else {self.gen('Bool', depth - 1)})"
                )
            return self._leaf(ty)
        # numeric
        kind = rng.choice(("bin", "bin", "bin", "ite", "un", "leaf"))
        if kind == "bin":
            if rng.random() < 0.12:
                # division and modulo, mostly by non-zero literals
                op = rng.choice(("/", "%")) if ty != "Float64" else "/"
                if rng.random() < 0.8:
                    if ty == "Float64":
                        rhs = repr(round(rng.uniform(0.5, 9.0), 2))
                    elif ty == "UInt64":
                        rhs = str(rng.randint(1, 9))
                    else:
                        rhs = str(rng.choice([n for n in range(-9, 10) if n]))
                else:
                    rhs = self.gen(ty, depth - 1)
                return f"({self.gen(ty, depth - 1)} {op} {rhs})"
            op = rng.choice(("+", "-", "*"))
            return f"({self.gen(ty, depth - 1)} {op} {self.gen(ty, depth - 1)})"
        if kind == "un" and ty in ("Int64", "Float64"):
            if rng.random() < 0.5:
                return f"(-{self.gen(ty, depth - 1)})"
            return f"abs({self.gen(ty, depth - 1)})"
        if kind == "ite":
            return (
                f"(if {self.gen('Bool', depth - 1)} "
                f"then {self.gen(ty, depth - 1)} "
                f"else {self.gen(ty, depth - 1)})"
            )
        return self._leaf(ty)


def _build_candidate(rng: random.Random) -> str:
    total = rng.randint(2, 4)
    n_in = rng.randint(1, min(2, total - 1))
    n_out = total - n_in
    lines = []
    env: list[tuple[str, str]] = []
    for i in range(n_in):
        ty = rng.choice(SCALARS[:4])
        name = f"x{i}"
        lines.append(f"input {name} : {ty}")
        env.append((name, ty))
    for i in range(n_out):
        ty = rng.choice(SCALARS)
        name = f"y{i}"
        gen = _ExprGen(rng, list(env), self_name=name, self_type=ty)
        expr = gen.gen(ty, rng.randint(1, 3))
        if not gen.anchored:
            expr = gen._offset(ty) if not gen._same(ty) else gen._sync(ty)
            expr = f"({expr})" if rng.random() < 0.3 else expr
        ann = f" : {ty}" if rng.random() < 0.5 else ""
        lines.append(f"output {name}{ann} := {expr}")
        env.append((name, ty))
    if rng.random() < 0.6:
        gen = _ExprGen(rng, list(env))
        cond = gen.gen("Bool", 2)
        if not gen.anchored:
            name, ty = env[0]
            if ty == "Bool":
                cond = f"({name} && {cond})"
            else:
                cond = f"(({name} == {name}) && {cond})"
        msg = f' "alert {rng.randint(0, 99)}"' if rng.random() < 0.6 else ""
        lines.append(f"trigger {cond}{msg}")
    return "\n".join(lines) + "\n"


def gen_event_spec(rng: random.Random):
    """Return (source, clean AnalysisReport) for a random event-based spec."""
    for _ in range(60):
        text = _build_candidate(rng)
        rep = run_all(text)
        if rep.ok:
            return text, rep
    raise AssertionError("could not generate a clean specification")


def gen_window_spec(rng: random.Random):
    """Return (source, report, agg) for a single-window periodic spec."""
    ity = rng.choice(NUMERIC)
    agg = rng.choice(("count", "sum", "avg", "min", "max"))
    dur = rng.randint(1, 10)
    freq = rng.randint(1, 4)
    if agg == "count":
        rty = "UInt64"
    elif agg == "avg":
        rty = "Float64"
    else:
        rty = ity
    default = f", or: {_literal(rng, rty)}" if rng.random() < 0.7 else ""
    text = (
        f"input v : {ity}\n\n"
        f"output w @{freq}Hz := v.aggregate(over: {dur}s, using: {agg}{default})\n"
    )
    rep = run_all(text)
    assert rep.ok, [d.code for d in rep.diagnostics]
    return text, rep, agg


def _rand_value(rng: random.Random, vt, small: bool = False):
    if vt == lang.BOOL:
        return rng.random() < 0.5
    if vt == lang.INT64:
        if not small and rng.random() < 0.04:
            return rng.choice((2**62, -(2**62)))
        return rng.randint(-30, 30)
    if vt == lang.UINT64:
        if not small and rng.random() < 0.04:
            return 2**63
        return rng.randint(0, 30)
    if vt == lang.FLOAT64:
        return round(rng.uniform(-100.0, 100.0), 3)
    if vt == lang.STRING:
        return rng.choice(("idle", "run", "halt", "a"))
    raise AssertionError(f"no generator for {vt}")


def gen_rows(rng: random.Random, rep, max_events=50, small=False):
    """Random trace rows: list of (Fraction time, {input name: value}).

    Timestamps are weakly monotonic; every event carries a non-empty
    subset of the declared inputs.
    """
    inputs = [(i.name, rep.vtypes.streams[rep.table.by_name[i.name]])
              for i in rep.spec.inputs]
    rows = []
    t = Fraction(rng.randint(0, 30), 10)
    for _ in range(rng.randint(1, max_events)):
        present = [p for p in inputs if rng.random() < 0.75]
        if not present:
            present = [rng.choice(inputs)]
        rows.append((t, {name: _rand_value(rng, vt, small) for name, vt in present}))
        step = Fraction(rng.randint(0, 25), 10)
        t += step
    return rows


def rows_to_events(mir, rows):
    """Adapt neutral rows to engine events keyed by event-layout index."""
    return [Event(t, {mir.event_layout[n]: v for n, v in vals.items()})
            for t, vals in rows]


def rows_to_oracle(rep, rows):
    """Adapt neutral rows to oracle events keyed by StreamId."""
    by_name = rep.table.by_name
    return [(t, {by_name[n]: v for n, v in vals.items()}) for t, vals in rows]
