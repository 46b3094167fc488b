"""Command-line interface.

    rill analyze SPEC [--json]
    rill graph SPEC [--format dot|json] [--view pacing|memory] [-o FILE]
    rill run SPEC TRACE [--verdicts MODE] [--output csv|jsonl]
                        [--plot-data FILE] [--start-time T]
    rill step SPEC TRACE [--verdicts MODE] [--start-time T]
    rill serve

Exit codes: 0 success, 1 diagnostics or runtime fault, 2 usage or I/O errors.
`serve` speaks newline-delimited JSON on stdin/stdout: one request object per
line in, one `{"id", "ok", ...}` response per line out.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from rill.analysis import AnalysisReport, graph_dot, graph_json, run_all
from rill.diagnostics import Severity, SourceMap, render
from rill.interpreter import (
    Event,
    Exhausted,
    RuntimeFault,
    StepSession,
    Verdict,
    VerdictMode,
    run_trace,
)
from rill.lang import StreamKind, format_time, parse_decimal
from rill.mir import MirSpec, lower
from rill.traceio import (
    TraceError,
    json_value,
    parse_trace,
    plot_data,
    render_value,
    verdict_json,
    write_verdicts_csv,
    write_verdicts_jsonl,
)


def _read_file(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as err:
        raise SystemExit(f"rill: cannot read {path}: {err.strerror}") from err


def _write_output(path: str | None, content: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(content)
        return
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(content)
    except OSError as err:
        raise SystemExit(f"rill: cannot write {path}: {err.strerror}") from err


def _print_diagnostics(report: AnalysisReport) -> None:
    smap = SourceMap(report.source)
    for diag in report.diagnostics:
        sys.stderr.write(render(diag, smap) + "\n")


def _analyzed(source: str) -> AnalysisReport:
    """Analysis for commands that need a clean spec; exits 1 otherwise."""
    report = run_all(source)
    if not report.ok:
        _print_diagnostics(report)
        raise SystemExit(1)
    return report


def project_verdicts(
    mir: MirSpec, verdicts: list[Verdict], mode: VerdictMode
) -> list[Verdict]:
    """Re-project changed-mode verdicts into another verdict mode."""
    if mode is VerdictMode.CHANGED:
        return verdicts
    if mode is VerdictMode.TRIGGERS:
        return [Verdict(v.time, v.kind, {}, v.fired) for v in verdicts]
    state: dict = {
        sid: None for sid in mir.streams if sid.kind is not StreamKind.TRIGGER
    }
    out = []
    for v in verdicts:
        state.update(v.values)
        out.append(Verdict(v.time, v.kind, dict(state), v.fired))
    return out


# ---------------------------------------------------------------------------
# analyze / graph


def cmd_analyze(args: argparse.Namespace) -> int:
    report = run_all(_read_file(args.spec))
    if args.json:
        sys.stdout.write(
            json.dumps(report.to_json(), indent=2, ensure_ascii=False) + "\n"
        )
    else:
        _print_diagnostics(report)
        for hint in report.hints:
            sys.stdout.write(hint.render() + "\n")
        errors = sum(1 for d in report.diagnostics if d.severity is Severity.ERROR)
        warnings = sum(1 for d in report.diagnostics if d.severity is Severity.WARNING)
        summary = "ok" if errors == 0 else f"{errors} error(s)"
        if warnings:
            summary += f", {warnings} warning(s)"
        sys.stdout.write(summary + "\n")
    return 0 if report.ok else 1


def cmd_graph(args: argparse.Namespace) -> int:
    report = _analyzed(_read_file(args.spec))
    assert report.spec and report.graph and report.vtypes
    assert report.pacing is not None and report.bounds is not None
    if args.format == "json":
        doc = graph_json(
            report.spec, report.graph, report.vtypes, report.pacing, report.bounds
        )
        _write_output(args.output, json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
    else:
        dot = graph_dot(
            report.spec,
            report.graph,
            report.vtypes,
            report.pacing,
            report.bounds,
            view=args.view,
        )
        _write_output(args.output, dot)
    return 0


# ---------------------------------------------------------------------------
# run


def _load_trace(path: str, mir: MirSpec) -> list[Event]:
    events, err = parse_trace(_read_file(path), mir)
    if err is not None:
        sys.stderr.write(f"{path}:{err}\n")
        raise SystemExit(1)
    return events


def _start_time(args: argparse.Namespace) -> Fraction | None:
    if args.start_time is None:
        return None
    try:
        return parse_decimal(args.start_time)
    except (ValueError, ArithmeticError):
        raise SystemExit(f"rill: invalid --start-time: {args.start_time!r}") from None


def cmd_run(args: argparse.Namespace) -> int:
    report = _analyzed(_read_file(args.spec))
    mir = lower(report)
    events = _load_trace(args.trace, mir)
    verdicts, fault = run_trace(
        mir, events, VerdictMode.CHANGED, start_time=_start_time(args)
    )
    mode = VerdictMode(args.verdicts)
    projected = project_verdicts(mir, verdicts, mode)
    if args.output == "jsonl":
        sys.stdout.write(write_verdicts_jsonl(mir, projected))
    else:
        sys.stdout.write(write_verdicts_csv(mir, projected))
    if args.plot_data is not None:
        doc = plot_data(mir, verdicts)
        _write_output(
            args.plot_data, json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
        )
    if fault is not None:
        sys.stderr.write(
            f"fault {fault.code} at t={format_time(fault.time)}"
            + (f" in '{fault.stream_name}'" if fault.stream_name else "")
            + f": {fault.message}\n"
        )
        return 1
    return 0


# ---------------------------------------------------------------------------
# step (interactive replay)


def _verdict_line(mir: MirSpec, verdict: Verdict) -> str:
    parts = [f"t={format_time(verdict.time)}", verdict.kind]
    for sid, value in verdict.values.items():
        parts.append(f"{mir.streams[sid].name}={render_value(value)}")
    line = " ".join(parts)
    for index, message in verdict.fired:
        line += f"  ! Trigger {index}: {message}"
    return line


def _state_lines(mir: MirSpec, snapshot: dict) -> list[str]:
    time = snapshot["time"]
    lines = [
        "time=" + (format_time(time) if time is not None else "-")
        + f" started={'true' if snapshot['started'] else 'false'}"
    ]
    for entry in snapshot["streams"]:
        cells = ", ".join(f"#{seq} {render_value(v)}" for seq, v in entry["buffer"])
        lines.append(f"{entry['name']}: [{cells}]")
    return lines


def cmd_step(args: argparse.Namespace) -> int:
    report = _analyzed(_read_file(args.spec))
    mir = lower(report)
    events = _load_trace(args.trace, mir)
    session = StepSession(
        mir, events, VerdictMode(args.verdicts), start_time=_start_time(args)
    )
    interactive = sys.stdin.isatty()

    def out(text: str) -> None:
        sys.stdout.write(text + "\n")

    while True:
        if interactive:
            sys.stdout.write("> ")
            sys.stdout.flush()
        line = sys.stdin.readline()
        if not line:
            return 0
        words = line.split()
        if not words:
            continue
        cmd, *rest = words
        if cmd == "quit":
            return 0
        if cmd == "step":
            count = 1
            if rest:
                try:
                    count = int(rest[0])
                except ValueError:
                    out(f"step: not a count: {rest[0]!r}")
                    continue
            for _ in range(max(count, 1)):
                try:
                    out(_verdict_line(mir, session.step()))
                except Exhausted:
                    out("exhausted")
                    break
                except RuntimeFault as fault:
                    out(
                        f"fault {fault.code} at t={format_time(fault.time)}: "
                        f"{fault.message}"
                    )
                    break
        elif cmd == "peek":
            nxt = session.peek()
            if nxt is None:
                out("exhausted" if session.fault is None else "halted")
            else:
                out(f"next: {nxt[0]} @ {format_time(nxt[1])}")
        elif cmd == "state":
            for text in _state_lines(mir, session.state()):
                out(text)
        elif cmd == "reset":
            session.reset()
            out("reset")
        else:
            out(f"unknown command: {cmd} (try: step [n], peek, state, reset, quit)")


# ---------------------------------------------------------------------------
# serve (newline-delimited JSON protocol)


class _Server:
    def __init__(self) -> None:
        self.session: StepSession | None = None
        self.session_mir: MirSpec | None = None

    # request handlers: return the `result` payload or raise _ProtocolError

    def handle(self, request: dict) -> dict:
        cmd = request.get("cmd")
        args = request.get("args")
        if isinstance(args, dict):
            # accept argument fields nested under "args" as well as flat
            request = {**args, **{k: v for k, v in request.items() if k != "args"}}
        handlers = {
            "analyze": self._analyze,
            "graph": self._graph,
            "run": self._run,
            "session.start": self._session_start,
            "session.step": self._session_step,
            "session.state": self._session_state,
            "session.reset": self._session_reset,
        }
        if cmd not in handlers:
            raise _ProtocolError(f"unknown command: {cmd!r}")
        return handlers[cmd](request)

    @staticmethod
    def _source(request: dict) -> str:
        source = request.get("source")
        if not isinstance(source, str):
            raise _ProtocolError("missing string field 'source'")
        return source

    def _analyze(self, request: dict) -> dict:
        return run_all(self._source(request)).to_json()

    def _clean_report(self, request: dict) -> AnalysisReport:
        report = run_all(self._source(request))
        if not report.ok:
            raise _ProtocolError(
                "analysis failed", extra={"analysis": report.to_json()}
            )
        return report

    def _graph(self, request: dict) -> dict:
        report = self._clean_report(request)
        return graph_json(
            report.spec, report.graph, report.vtypes, report.pacing, report.bounds
        )

    def _prepare(self, request: dict) -> tuple[MirSpec, list[Event], Fraction | None]:
        mir = lower(self._clean_report(request))
        trace = request.get("trace")
        if not isinstance(trace, str):
            raise _ProtocolError("missing string field 'trace'")
        events, err = parse_trace(trace, mir)
        if err is not None:
            raise _ProtocolError("trace error", extra={"trace": err.to_json()})
        start = request.get("startTime")
        start_time = None
        if start is not None:
            try:
                start_time = parse_decimal(str(start))
            except (ValueError, ArithmeticError):
                raise _ProtocolError(f"invalid startTime: {start!r}") from None
        return mir, events, start_time

    def _run(self, request: dict) -> dict:
        mir, events, start_time = self._prepare(request)
        mode = _verdict_mode(request)
        verdicts, fault = run_trace(
            mir, events, VerdictMode.CHANGED, start_time=start_time
        )
        projected = project_verdicts(mir, verdicts, mode)
        return {
            "verdicts": [verdict_json(mir, v) for v in projected],
            "fault": fault.to_json() if fault else None,
            "plot": plot_data(mir, verdicts),
            # rendered by the same writer the CLI uses, so text panes can
            # show the batch output byte-for-byte
            "text": write_verdicts_csv(mir, projected),
        }

    def _session_start(self, request: dict) -> dict:
        mir, events, start_time = self._prepare(request)
        self.session = StepSession(
            mir, events, _verdict_mode(request), start_time=start_time
        )
        self.session_mir = mir
        return {"started": True, "events": len(events)}

    def _live(self) -> StepSession:
        if self.session is None:
            raise _ProtocolError("no live session; send session.start first")
        return self.session

    def _session_step(self, request: dict) -> dict:
        session = self._live()
        assert self.session_mir is not None
        count = request.get("n", 1)
        if not isinstance(count, int) or count < 1:
            raise _ProtocolError(f"invalid step count: {count!r}")
        verdicts = []
        exhausted = False
        fault = None
        for _ in range(count):
            try:
                verdicts.append(verdict_json(self.session_mir, session.step()))
            except Exhausted:
                exhausted = True
                break
            except RuntimeFault as rf:
                fault = rf.to_json()
                break
        return {"verdicts": verdicts, "exhausted": exhausted, "fault": fault}

    def _session_state(self, request: dict) -> dict:
        session = self._live()
        snapshot = session.engine.snapshot()
        return {
            "started": snapshot["started"],
            "time": (
                format_time(snapshot["time"]) if snapshot["time"] is not None else None
            ),
            "streams": [
                {
                    "name": entry["name"],
                    "buffer": [
                        {"seq": seq, "value": json_value(v)}
                        for seq, v in entry["buffer"]
                    ],
                }
                for entry in snapshot["streams"]
            ],
        }

    def _session_reset(self, request: dict) -> dict:
        self._live().reset()
        return {"reset": True}


class _ProtocolError(Exception):
    def __init__(self, message: str, extra: dict | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.extra = extra or {}


def _verdict_mode(request: dict) -> VerdictMode:
    raw = request.get("verdicts", "triggers")
    try:
        return VerdictMode(raw)
    except ValueError:
        raise _ProtocolError(f"invalid verdicts mode: {raw!r}") from None


def cmd_serve(_args: argparse.Namespace) -> int:
    server = _Server()

    def respond(payload: dict) -> None:
        sys.stdout.write(
            json.dumps(payload, separators=(",", ":"), ensure_ascii=False) + "\n"
        )
        sys.stdout.flush()

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as err:
            respond(
                {"id": None, "ok": False, "error": {"message": f"malformed JSON: {err}"}}
            )
            continue
        rid = request.get("id") if isinstance(request, dict) else None
        if not isinstance(request, dict):
            respond(
                {"id": None, "ok": False, "error": {"message": "request must be an object"}}
            )
            continue
        try:
            result = server.handle(request)
            respond({"id": rid, "ok": True, "result": result})
        except _ProtocolError as err:
            respond(
                {"id": rid, "ok": False, "error": {"message": err.message, **err.extra}}
            )
        except Exception as err:  # never kill the server on a handler bug
            respond(
                {
                    "id": rid,
                    "ok": False,
                    "error": {"message": f"internal error: {err.__class__.__name__}: {err}"},
                }
            )
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rill",
        description="Stream specification analyzer and trace monitor.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="parse and analyze a specification")
    p_analyze.add_argument("spec", help="specification file")
    p_analyze.add_argument(
        "--json", action="store_true", help="emit a JSON report on stdout"
    )
    p_analyze.set_defaults(func=cmd_analyze)

    p_graph = sub.add_parser("graph", help="export the dependency graph")
    p_graph.add_argument("spec", help="specification file")
    p_graph.add_argument("--format", choices=("dot", "json"), default="dot")
    p_graph.add_argument(
        "--view",
        choices=("pacing", "memory"),
        default="pacing",
        help="node coloring for DOT output",
    )
    p_graph.add_argument("-o", "--output", default=None, help="output file (default stdout)")
    p_graph.set_defaults(func=cmd_graph)

    p_run = sub.add_parser("run", help="evaluate a trace against a specification")
    p_run.add_argument("spec", help="specification file")
    p_run.add_argument("trace", help="CSV trace file")
    p_run.add_argument(
        "--verdicts",
        choices=tuple(m.value for m in VerdictMode),
        default="triggers",
        help="how much state each verdict carries",
    )
    p_run.add_argument("--output", choices=("csv", "jsonl"), default="csv")
    p_run.add_argument(
        "--plot-data", default=None, metavar="FILE", help="also write chart JSON"
    )
    p_run.add_argument(
        "--start-time", default=None, help="override the monitor start time (seconds)"
    )
    p_run.set_defaults(func=cmd_run)

    p_step = sub.add_parser("step", help="replay a trace cycle by cycle")
    p_step.add_argument("spec", help="specification file")
    p_step.add_argument("trace", help="CSV trace file")
    p_step.add_argument(
        "--verdicts",
        choices=tuple(m.value for m in VerdictMode),
        default="full",
    )
    p_step.add_argument("--start-time", default=None)
    p_step.set_defaults(func=cmd_step)

    p_serve = sub.add_parser("serve", help="speak the JSON protocol on stdin/stdout")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as err:
        if isinstance(err.code, str):
            sys.stderr.write(err.code + "\n")
            return 2
        raise
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
