/**
 * Types and a small client for the newline-delimited JSON command protocol
 * served by `rill serve`.
 *
 * Every request carries a monotonically increasing id; the client tags each
 * in-flight request with its UI concern (e.g. "analyze") and marks a response
 * stale when a newer request of the same concern has been issued since.  The
 * UI drops stale results so the screen always reflects the latest edit.
 */

export interface ProtocolRequest {
  id: number;
  cmd: string;
  args?: Record<string, unknown>;
}

export interface ProtocolError {
  message: string;
  [extra: string]: unknown;
}

export interface ProtocolResponse {
  id: number | null;
  ok: boolean;
  result?: unknown;
  error?: ProtocolError;
}

export interface Transport {
  send(request: ProtocolRequest): Promise<ProtocolResponse>;
  close(): Promise<void>;
}

/* ------------------------------------------------------------------ *
 * Payload shapes (mirroring the analysis / graph / run JSON schemas)  *
 * ------------------------------------------------------------------ */

export interface SpanJson {
  startByte: number;
  endByte: number;
  startLine: number;
  startCol: number;
  endLine: number;
  endCol: number;
}

export interface DiagnosticJson {
  code: string;
  severity: "error" | "warning";
  message: string;
  span: SpanJson;
  related: { message: string; span: SpanJson }[];
}

export interface HintJson {
  name: string;
  kind: string;
  valueType: string;
  pacing: string;
  rendered: string;
}

export interface AnalyzeResult {
  ok: boolean;
  diagnostics: DiagnosticJson[];
  hints: HintJson[];
}

export interface GraphNodeJson {
  id: string;
  name: string;
  kind: "input" | "output" | "trigger";
  valueType: string;
  pacing: string;
  pacingClass: string;
  memoryBound: number;
}

export interface GraphEdgeJson {
  from: string;
  to: string;
  kind: "sync" | "offset" | "hold" | "window";
  weight?: number;
  durationSecs?: number | string;
  panes?: number;
  thickness: number;
}

export interface GraphResult {
  version: number;
  nodes: GraphNodeJson[];
  edges: GraphEdgeJson[];
}

export interface FiringJson {
  index: number;
  message: string;
}

export interface VerdictJson {
  time: string;
  kind: "event" | "periodic";
  values: Record<string, unknown>;
  fired: FiringJson[];
}

export interface PlotSeriesJson {
  stream: string;
  points: [number, number][];
}

export interface PlotJson {
  series: PlotSeriesJson[];
  triggers: { index: number; message: string; times: number[] }[];
}

export interface FaultJson {
  code: string;
  stream: string;
  time: string;
  message: string;
}

export interface RunResult {
  verdicts: VerdictJson[];
  fault: FaultJson | null;
  plot: PlotJson;
  /** Batch output rendered by the same writer the CLI uses (byte-exact). */
  text: string;
}

export interface StepResult {
  verdicts: VerdictJson[];
  exhausted: boolean;
  fault: FaultJson | null;
}

export interface SessionStateResult {
  started: boolean;
  time: string | null;
  streams: { name: string; buffer: { seq: number; value: unknown }[] }[];
}

export type VerdictModeName = "triggers" | "changed" | "full";

/* ------------------------------------------------------------------ *
 * Client                                                              *
 * ------------------------------------------------------------------ */

export interface ClientReply<T> {
  /** True when a newer request of the same concern was issued meanwhile. */
  stale: boolean;
  response: ProtocolResponse;
  /** Present iff ok and not an error envelope. */
  result?: T;
}

export class ProtocolClient {
  private nextId = 1;
  private latestByConcern = new Map<string, number>();

  constructor(private readonly transport: Transport) {}

  /**
   * Issue a request.  `concern` groups requests whose responses supersede
   * one another (defaults to the command name).
   */
  async request<T>(
    cmd: string,
    args: Record<string, unknown> = {},
    concern?: string,
  ): Promise<ClientReply<T>> {
    const key = concern ?? cmd;
    const id = this.nextId++;
    this.latestByConcern.set(key, id);
    const response = await this.transport.send({ id, cmd, args });
    const stale = (this.latestByConcern.get(key) ?? id) !== id;
    const reply: ClientReply<T> = { stale, response };
    if (response.ok) {
      reply.result = response.result as T;
    }
    return reply;
  }

  analyze(source: string): Promise<ClientReply<AnalyzeResult>> {
    return this.request<AnalyzeResult>("analyze", { source });
  }

  graph(source: string): Promise<ClientReply<GraphResult>> {
    return this.request<GraphResult>("graph", { source });
  }

  run(
    source: string,
    trace: string,
    verdicts: VerdictModeName = "changed",
    startTime?: string,
  ): Promise<ClientReply<RunResult>> {
    const args: Record<string, unknown> = { source, trace, verdicts };
    if (startTime !== undefined) {
      args.startTime = startTime;
    }
    return this.request<RunResult>("run", args);
  }

  sessionStart(
    source: string,
    trace: string,
    verdicts: VerdictModeName = "changed",
  ): Promise<ClientReply<{ started: boolean; events: number }>> {
    return this.request("session.start", { source, trace, verdicts });
  }

  sessionStep(n = 1): Promise<ClientReply<StepResult>> {
    return this.request<StepResult>("session.step", { n });
  }

  sessionState(): Promise<ClientReply<SessionStateResult>> {
    return this.request<SessionStateResult>("session.state");
  }

  sessionReset(): Promise<ClientReply<{ reset: boolean }>> {
    return this.request("session.reset");
  }

  close(): Promise<void> {
    return this.transport.close();
  }
}

/** Debounce helper used by the editor (~300 ms between keystroke and analyze). */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  delayMs: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) {
      clearTimeout(timer);
    }
    timer = setTimeout(() => {
      timer = undefined;
      fn(...args);
    }, delayMs);
  };
}
