"""Trace-driven evaluation engine over the lowered form.

The engine runs a sequence of cycles.  An *event cycle* happens when an input
event arrives: the present inputs are recorded and every event-paced stream
whose activation formula is satisfied evaluates, in dependency order.  A
*periodic cycle* happens when a deadline falls due: every stream whose period
divides the elapsed time evaluates.  Deadlines that land at or before an
event's timestamp run before the event; deadlines landing at the same instant
are merged into a single cycle with a single verdict.

Memory never grows with the trace: each stream keeps a fixed ring buffer and
each sliding window a fixed number of pre-aggregated panes on the accessor's
deadline grid.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from heapq import heappop, heappush

from rill.lang import (
    AggFunc,
    Binary,
    BoolLit,
    EventPacing,
    Expr,
    FLOAT64,
    FloatLit,
    FnCall,
    HoldAccess,
    IfThenElse,
    IntLit,
    INT64,
    INT64_MAX,
    INT64_MIN,
    OffsetAccess,
    PeriodicPacing,
    Scalar,
    StreamId,
    StreamKind,
    StreamRef,
    StringLit,
    TupleExpr,
    TupleProj,
    UINT64,
    UINT64_MAX,
    Unary,
    ValueType,
    WindowAccess,
    format_time,
)
from rill.mir import MirSpec, WindowSlot


class VerdictMode(Enum):
    TRIGGERS = "triggers"
    CHANGED = "changed"
    FULL = "full"


@dataclass(frozen=True)
class Event:
    time: Fraction
    values: dict[int, object]  # input index -> value


@dataclass
class Verdict:
    time: Fraction
    kind: str  # "event" | "periodic"
    values: dict[StreamId, object]  # mode-dependent, triggers never included
    fired: list[tuple[int, str]]  # (trigger index, message)


class RuntimeFault(Exception):
    """A fault that halts evaluation.  The failing cycle yields no verdict."""

    def __init__(
        self,
        code: str,
        stream: StreamId | None,
        stream_name: str | None,
        time: Fraction,
        message: str,
    ) -> None:
        super().__init__(f"{code}: {message}")
        self.code = code
        self.stream = stream
        self.stream_name = stream_name
        self.time = time
        self.message = message

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "stream": self.stream_name,
            "time": format_time(self.time),
            "message": self.message,
        }


def _int_in_range(value: int, vt: ValueType) -> bool:
    if vt == INT64:
        return INT64_MIN <= value <= INT64_MAX
    if vt == UINT64:
        return 0 <= value <= UINT64_MAX
    return True


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _zero(vt: ValueType):
    return 0.0 if vt == FLOAT64 else 0


def _agg_result_type(agg: AggFunc, target: ValueType) -> ValueType:
    if agg is AggFunc.COUNT:
        return UINT64
    if agg is AggFunc.AVG:
        return FLOAT64
    return target


# A pane pre-aggregates every target value whose timestamp falls in
# (end - period, end]: [end, count, total, minimum, maximum].
class _Pane(list):
    __slots__ = ()


class Engine:
    def __init__(
        self,
        mir: MirSpec,
        mode: VerdictMode = VerdictMode.TRIGGERS,
        start_time: Fraction | None = None,
    ) -> None:
        self.mir = mir
        self.mode = mode
        self.start_time: Fraction | None = None
        self.current_time: Fraction | None = None
        self.last_event_time: Fraction | None = None
        self.halted = False
        self.buffers: dict[StreamId, deque] = {
            sid: deque(maxlen=s.buffer_size) for sid, s in mir.streams.items()
        }
        self.seq: dict[StreamId, int] = {sid: 0 for sid in mir.streams}
        self.panes: dict[int, deque] = {w.node_id: deque() for w in mir.windows}
        self._slot_for: dict[int, WindowSlot] = {w.node_id: w for w in mir.windows}
        self._slots_by_target: dict[StreamId, list[WindowSlot]] = {}
        for w in mir.windows:
            self._slots_by_target.setdefault(w.target, []).append(w)
        self._heap: list[tuple[Fraction, int]] = []
        self._evaluated_now: set[StreamId] = set()
        self._full_state: dict[StreamId, object] = {
            sid: None for sid in mir.streams if sid.kind is not StreamKind.TRIGGER
        }
        self._input_ids = {
            idx: StreamId(StreamKind.INPUT, idx) for idx in mir.event_layout.values()
        }
        if start_time is not None:
            self.start(start_time)

    # -- lifecycle

    @property
    def started(self) -> bool:
        return self.start_time is not None

    def start(self, start_time: Fraction) -> None:
        assert not self.started, "engine already started"
        self.start_time = start_time
        self.current_time = start_time
        for g, (freq, _members) in enumerate(self.mir.periodic_groups):
            heappush(self._heap, (start_time + Fraction(1) / freq, g))

    def accept_event(self, event: Event) -> list[Verdict]:
        """All verdicts caused by this event: due deadlines first, then the
        event cycle itself."""
        if not self.started:
            self.start(event.time)
        out: list[Verdict] = []
        verdict = self.step_deadline(event.time)
        while verdict is not None:
            out.append(verdict)
            verdict = self.step_deadline(event.time)
        out.append(self.step_event(event))
        return out

    def finish(self, end_time: Fraction | None = None) -> list[Verdict]:
        """Drain deadlines up to `end_time` (default: the last cycle time)."""
        if not self.started:
            return []
        upto = end_time if end_time is not None else self.current_time
        out = []
        verdict = self.step_deadline(upto)
        while verdict is not None:
            out.append(verdict)
            verdict = self.step_deadline(upto)
        return out

    # -- single-cycle primitives (the step sessions drive these directly)

    def peek_deadline(self) -> Fraction | None:
        return self._heap[0][0] if self._heap else None

    def step_deadline(self, upto: Fraction) -> Verdict | None:
        """Run the next deadline cycle if it falls due at or before `upto`."""
        self._check_alive()
        if not self._heap or self._heap[0][0] > upto:
            return None
        d = self._heap[0][0]
        due: set[StreamId] = set()
        while self._heap and self._heap[0][0] == d:
            _, g = heappop(self._heap)
            freq, members = self.mir.periodic_groups[g]
            due.update(members)
            heappush(self._heap, (d + Fraction(1) / freq, g))
        return self._run_cycle(d, "periodic", due, inputs=None)

    def step_event(self, event: Event) -> Verdict:
        self._check_alive()
        if not self.started:
            self.start(event.time)
        t = event.time
        assert self.start_time is not None
        if t < self.start_time:
            self._fault(
                "R001",
                None,
                t,
                f"timestamp {format_time(t)} precedes the start time "
                f"{format_time(self.start_time)}",
            )
        if self.last_event_time is not None and t < self.last_event_time:
            self._fault(
                "R001",
                None,
                t,
                f"non-monotonic timestamp: {format_time(t)} after "
                f"{format_time(self.last_event_time)}",
            )
        self.last_event_time = t
        return self._run_cycle(t, "event", None, inputs=event.values)

    # -- cycle execution

    def _check_alive(self) -> None:
        if self.halted:
            raise RuntimeError("engine halted by an earlier fault")

    def _fault(
        self, code: str, sid: StreamId | None, t: Fraction, message: str
    ) -> None:
        self.halted = True
        name = self.mir.streams[sid].name if sid is not None else None
        raise RuntimeFault(code, sid, name, t, message)

    def _run_cycle(
        self,
        t: Fraction,
        kind: str,
        due: set[StreamId] | None,
        inputs: dict[int, object] | None,
    ) -> Verdict:
        self._evaluated_now = set()
        cycle_values: dict[StreamId, object] = {}
        fired: list[tuple[int, str]] = []
        present_idx: set[int] = set()
        try:
            if inputs is not None:
                for idx in sorted(inputs):
                    sid = self._input_ids[idx]
                    self._record(sid, t, inputs[idx])
                    cycle_values[sid] = inputs[idx]
                    present_idx.add(idx)
            for sid in self.mir.eval_order:
                pacing = self.mir.streams[sid].pacing
                if due is not None:  # periodic cycle
                    if sid not in due:
                        continue
                else:  # event cycle
                    if not isinstance(pacing, EventPacing):
                        continue
                    if not any(conj <= present_idx for conj in pacing.dnf):
                        continue
                expr = self.mir.streams[sid].expression
                assert expr is not None
                value = self._eval(expr, sid, t)
                self._record(sid, t, value)
                if sid.kind is StreamKind.TRIGGER:
                    if value is True:
                        fired.append((sid.index, self.mir.triggers[sid.index].message))
                else:
                    cycle_values[sid] = value
        except RuntimeFault:
            self.halted = True
            raise
        self.current_time = t
        return self._make_verdict(t, kind, cycle_values, fired)

    def _make_verdict(
        self,
        t: Fraction,
        kind: str,
        cycle_values: dict[StreamId, object],
        fired: list[tuple[int, str]],
    ) -> Verdict:
        if self.mode is VerdictMode.TRIGGERS:
            values: dict[StreamId, object] = {}
        elif self.mode is VerdictMode.CHANGED:
            values = cycle_values
        else:
            self._full_state.update(cycle_values)
            values = dict(self._full_state)
        return Verdict(t, kind, values, fired)

    def _record(self, sid: StreamId, t: Fraction, value) -> None:
        self.buffers[sid].append((self.seq[sid], value))
        self.seq[sid] += 1
        self._evaluated_now.add(sid)
        for slot in self._slots_by_target.get(sid, ()):
            self._pane_add(slot, t, value)

    def _pane_add(self, slot: WindowSlot, t: Fraction, value) -> None:
        assert self.start_time is not None
        end = self.start_time + slot.period * math.ceil(
            (t - self.start_time) / slot.period
        )
        panes = self.panes[slot.node_id]
        if panes and panes[-1][0] == end:
            pane = panes[-1]
            pane[1] += 1
            pane[2] = pane[2] + value
            if value < pane[3]:
                pane[3] = value
            if value > pane[4]:
                pane[4] = value
        else:
            panes.append(_Pane([end, 1, value, value, value]))

    # -- expression evaluation

    def _eval(self, expr: Expr, sid: StreamId, t: Fraction):
        if isinstance(expr, IntLit):
            return expr.value
        if isinstance(expr, (FloatLit, BoolLit, StringLit)):
            return expr.value
        if isinstance(expr, StreamRef):
            target = self.mir.resolution[expr.node_id]
            assert target in self._evaluated_now, "sync target must be current"
            return self.buffers[target][-1][1]
        if isinstance(expr, OffsetAccess):
            target = self.mir.resolution[expr.node_id]
            buf = self.buffers[target]
            k = -expr.offset
            if target in self._evaluated_now:
                if len(buf) < k + 1:
                    return self._eval(expr.default, sid, t)
                return buf[-(k + 1)][1]
            if len(buf) < k:
                return self._eval(expr.default, sid, t)
            return buf[-k][1]
        if isinstance(expr, HoldAccess):
            target = self.mir.resolution[expr.node_id]
            buf = self.buffers[target]
            return buf[-1][1] if buf else self._eval(expr.default, sid, t)
        if isinstance(expr, WindowAccess):
            return self._window_read(expr, sid, t)
        if isinstance(expr, Unary):
            value = self._eval(expr.operand, sid, t)
            if expr.op == "!":
                return not value
            ty = self.mir.node_types[expr.node_id]
            if ty == FLOAT64:
                return -value
            if not _int_in_range(-value, ty):
                self._fault("R003", sid, t, f"integer overflow negating {value}")
            return -value
        if isinstance(expr, Binary):
            return self._binary(expr, sid, t)
        if isinstance(expr, IfThenElse):
            if self._eval(expr.condition, sid, t):
                return self._eval(expr.then_branch, sid, t)
            return self._eval(expr.else_branch, sid, t)
        if isinstance(expr, FnCall):  # `abs`, the only callable
            value = self._eval(expr.args[0], sid, t)
            ty = self.mir.node_types[expr.node_id]
            if ty == FLOAT64:
                return math.fabs(value)
            if not _int_in_range(abs(value), ty):
                self._fault("R003", sid, t, f"integer overflow in abs({value})")
            return abs(value)
        if isinstance(expr, TupleExpr):
            return tuple(self._eval(e, sid, t) for e in expr.elements)
        if isinstance(expr, TupleProj):
            return self._eval(expr.operand, sid, t)[expr.index]
        raise TypeError(f"unhandled expression node: {expr!r}")

    def _binary(self, expr: Binary, sid: StreamId, t: Fraction):
        op = expr.op
        if op == "&&":
            return self._eval(expr.left, sid, t) and self._eval(expr.right, sid, t)
        if op == "||":
            return self._eval(expr.left, sid, t) or self._eval(expr.right, sid, t)
        a = self._eval(expr.left, sid, t)
        b = self._eval(expr.right, sid, t)
        if op == "==":
            return a == b
        if op == "!=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        ty = self.mir.node_types[expr.node_id]
        if ty == FLOAT64:
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if op == "/":
                if b == 0.0:
                    if a == 0.0 or math.isnan(a):
                        return math.nan
                    return math.copysign(math.inf, a) * math.copysign(1.0, b)
                return a / b
            # fmod: undefined cases yield NaN instead of raising
            if b == 0.0 or math.isnan(a) or math.isinf(a):
                return math.nan
            return math.fmod(a, b)
        if op == "+":
            result = a + b
        elif op == "-":
            result = a - b
        elif op == "*":
            result = a * b
        else:
            if b == 0:
                self._fault(
                    "R002",
                    sid,
                    t,
                    f"{'division' if op == '/' else 'modulo'} by zero",
                )
            result = _trunc_div(a, b) if op == "/" else a - _trunc_div(a, b) * b
        if not _int_in_range(result, ty):
            self._fault("R003", sid, t, f"integer overflow in {a} {op} {b}")
        return result

    def _window_read(self, expr: WindowAccess, sid: StreamId, t: Fraction):
        slot = self._slot_for[expr.node_id]
        panes = self.panes[slot.node_id]
        lo = t - slot.duration
        while panes and panes[0][0] <= lo:
            panes.popleft()
        agg = slot.agg
        if agg is AggFunc.COUNT:
            return sum(p[1] for p in panes)
        target_vt = self.mir.streams[slot.target].value_type
        result_vt = _agg_result_type(agg, target_vt)
        if not panes:
            if agg is AggFunc.SUM:
                return _zero(result_vt)
            if slot.default is not None:
                return self._eval(slot.default, sid, t)
            return _zero(result_vt)
        if agg is AggFunc.SUM:
            total = panes[0][2]
            for p in list(panes)[1:]:
                total = total + p[2]
            if result_vt != FLOAT64 and not _int_in_range(total, result_vt):
                self._fault("R003", sid, t, "overflow in sum window")
            return total
        if agg is AggFunc.AVG:
            total = panes[0][2]
            count = panes[0][1]
            for p in list(panes)[1:]:
                total = total + p[2]
                count += p[1]
            return float(total) / count
        if agg is AggFunc.MIN:
            return min(p[3] for p in panes)
        return max(p[4] for p in panes)

    # -- introspection

    def snapshot(self) -> dict:
        """Raw engine state: ring buffers with activation sequence numbers."""
        streams = []
        for sid, stream in self.mir.streams.items():
            streams.append(
                {
                    "id": sid,
                    "name": stream.name,
                    "buffer": [(seq, value) for seq, value in self.buffers[sid]],
                }
            )
        return {
            "started": self.started,
            "time": self.current_time,
            "streams": streams,
        }


class Exhausted(Exception):
    """Raised by StepSession.step once every cycle has been consumed."""


@dataclass
class StepSession:
    """Cycle-by-cycle replay of a fixed event sequence.

    Each step runs exactly one cycle: the next due deadline batch, or the
    next event once no deadline precedes it.  Trailing deadlines up to the
    horizon (the last event's timestamp unless an end time is given) are
    also served as steps.
    """

    mir: MirSpec
    events: list[Event]
    mode: VerdictMode = VerdictMode.FULL
    start_time: Fraction | None = None
    end_time: Fraction | None = None
    engine: Engine = field(init=False)
    pos: int = field(init=False, default=0)
    fault: RuntimeFault | None = field(init=False, default=None)

    def __post_init__(self) -> None:
        self.engine = Engine(self.mir, self.mode, self.start_time)

    def _horizon(self) -> Fraction | None:
        if self.end_time is not None:
            return self.end_time
        if self.events:
            return self.events[-1].time
        return self.engine.current_time

    def _ensure_started(self) -> None:
        if not self.engine.started and self.events:
            self.engine.start(self.events[0].time)

    def peek(self) -> tuple[str, Fraction] | None:
        """(kind, time) of the next cycle, or None when exhausted."""
        if self.fault is not None:
            return None
        self._ensure_started()
        deadline = self.engine.peek_deadline()
        if self.pos < len(self.events):
            event_time = self.events[self.pos].time
            if deadline is not None and deadline <= event_time:
                return ("periodic", deadline)
            return ("event", event_time)
        horizon = self._horizon()
        if deadline is not None and horizon is not None and deadline <= horizon:
            return ("periodic", deadline)
        return None

    def step(self) -> Verdict:
        """Run one cycle.  Raises Exhausted at the end of the replay and
        RuntimeFault (once) if evaluation faults."""
        if self.fault is not None:
            raise Exhausted("session halted by an earlier fault")
        nxt = self.peek()
        if nxt is None:
            raise Exhausted("no cycles left")
        kind, _time = nxt
        try:
            if kind == "periodic":
                verdict = self.engine.step_deadline(self._upto())
                assert verdict is not None
                return verdict
            event = self.events[self.pos]
            self.pos += 1
            return self.engine.step_event(event)
        except RuntimeFault as fault:
            self.fault = fault
            raise

    def _upto(self) -> Fraction:
        if self.pos < len(self.events):
            return self.events[self.pos].time
        horizon = self._horizon()
        assert horizon is not None
        return horizon

    def run_to_end(self) -> list[Verdict]:
        out = []
        while True:
            try:
                out.append(self.step())
            except Exhausted:
                return out

    def state(self) -> dict:
        return self.engine.snapshot()

    def reset(self) -> None:
        self.engine = Engine(self.mir, self.mode, self.start_time)
        self.pos = 0
        self.fault = None


def run_trace(
    mir: MirSpec,
    events: list[Event],
    mode: VerdictMode = VerdictMode.TRIGGERS,
    start_time: Fraction | None = None,
    end_time: Fraction | None = None,
) -> tuple[list[Verdict], RuntimeFault | None]:
    """Batch evaluation; on a fault, the verdicts so far plus the fault."""
    engine = Engine(mir, mode, start_time)
    verdicts: list[Verdict] = []
    try:
        for event in events:
            if not engine.started:
                engine.start(event.time)
            verdict = engine.step_deadline(event.time)
            while verdict is not None:
                verdicts.append(verdict)
                verdict = engine.step_deadline(event.time)
            verdicts.append(engine.step_event(event))
        if engine.started:
            upto = end_time if end_time is not None else engine.current_time
            verdict = engine.step_deadline(upto)
            while verdict is not None:
                verdicts.append(verdict)
                verdict = engine.step_deadline(upto)
    except RuntimeFault as fault:
        return verdicts, fault
    return verdicts, None
