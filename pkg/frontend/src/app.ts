/**
 * Browser entry point: wires the three-panel playground together.
 *
 * Left: specification editor (textarea + decorated overlay).  Right: tabs
 * for the dependency graph and the trace editor.  Bottom: tabs for textual
 * batch output and the plot, plus step-debugging controls.  All analysis
 * goes through the JSON protocol bridged at /api; edits re-analyze after a
 * 300 ms debounce and stale responses are discarded.
 */

import {
  debounce,
  ProtocolClient,
  type AnalyzeResult,
  type GraphResult,
  type ProtocolRequest,
  type ProtocolResponse,
  type RunResult,
  type SessionStateResult,
  type StepResult,
  type Transport,
  type VerdictModeName,
  type VerdictJson,
} from "./protocol.js";
import {
  expandAll,
  initialViewState,
  MergeError,
  mergeNodes,
  setMode,
  toggleHidden,
  type GraphViewState,
  type ViewMode,
} from "./graphState.js";
import { legendItems, renderGraph } from "./render.js";
import { hasPlottableData, renderPlot, seriesColor } from "./plot.js";
import { overlayHtml } from "./editor.js";
import { renderToString } from "./svg.js";

const ANALYZE_DEBOUNCE_MS = 300;

const DEFAULT_SPEC = `input altitude : Float

output avg_altitude @1Hz :=
    altitude.aggregate(over: 1min, using: avg)

output altitude_diff :=
    abs(altitude - avg_altitude.hold(or: altitude))

trigger altitude_diff > 10.0 "Altitude changed too quickly"
`;

const DEFAULT_TRACE = `time,altitude
0.0,100.0
0.4,100.0
0.8,100.0
1.2,120.0
`;

class HttpTransport implements Transport {
  async send(request: ProtocolRequest): Promise<ProtocolResponse> {
    const res = await fetch("/api", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
    return (await res.json()) as ProtocolResponse;
  }

  async close(): Promise<void> {
    /* nothing to close over HTTP */
  }
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function toast(message: string): void {
  const box = el<HTMLDivElement>("toast");
  box.textContent = message;
  box.classList.add("visible");
  setTimeout(() => box.classList.remove("visible"), 4000);
}

interface PersistedState {
  spec: string;
  trace: string;
  mode: ViewMode;
}

function loadPersisted(): PersistedState {
  try {
    const raw = localStorage.getItem("rill-playground");
    if (raw !== null) {
      const parsed = JSON.parse(raw) as Partial<PersistedState>;
      return {
        spec: typeof parsed.spec === "string" ? parsed.spec : DEFAULT_SPEC,
        trace: typeof parsed.trace === "string" ? parsed.trace : DEFAULT_TRACE,
        mode: parsed.mode === "memory" ? "memory" : "pacing",
      };
    }
  } catch {
    /* fall through to defaults */
  }
  return { spec: DEFAULT_SPEC, trace: DEFAULT_TRACE, mode: "pacing" };
}

function persist(state: PersistedState): void {
  try {
    localStorage.setItem("rill-playground", JSON.stringify(state));
  } catch {
    /* storage full or denied: persistence is best-effort */
  }
}

function main(): void {
  const client = new ProtocolClient(new HttpTransport());
  const persisted = loadPersisted();

  const specEditor = el<HTMLTextAreaElement>("spec-editor");
  const specOverlay = el<HTMLPreElement>("spec-overlay");
  const traceEditor = el<HTMLTextAreaElement>("trace-editor");
  const graphHost = el<HTMLDivElement>("graph-host");
  const legendHost = el<HTMLDivElement>("graph-legend");
  const outputPre = el<HTMLPreElement>("output-text");
  const plotHost = el<HTMLDivElement>("plot-host");
  const plotLegend = el<HTMLDivElement>("plot-legend");
  const stateHost = el<HTMLDivElement>("step-state");
  const stepLog = el<HTMLPreElement>("step-log");
  const statusBar = el<HTMLSpanElement>("status");

  specEditor.value = persisted.spec;
  traceEditor.value = persisted.trace;

  let analysis: AnalyzeResult | null = null;
  let graphDoc: GraphResult | null = null;
  let viewState: GraphViewState = initialViewState(persisted.mode);
  let selection = new Set<string>();
  let lastRun: RunResult | null = null;
  let hiddenSeries = new Set<string>();
  let sessionLive = false;
  let sessionExhausted = false;

  const save = (): void =>
    persist({
      spec: specEditor.value,
      trace: traceEditor.value,
      mode: viewState.mode,
    });

  /* ----- editor overlay + analysis ---------------------------------- */

  const refreshOverlay = (): void => {
    specOverlay.innerHTML = overlayHtml(specEditor.value, analysis);
  };

  const refreshGraph = (): void => {
    if (graphDoc === null) {
      graphHost.innerHTML = '<p class="placeholder">fix the errors to see the graph</p>';
      legendHost.innerHTML = "";
      return;
    }
    graphHost.innerHTML = renderToString(
      renderGraph(graphDoc, viewState, { selected: selection }),
    );
    const legend = legendItems(graphDoc, viewState.mode)
      .map(
        (item) =>
          `<span class="legend-item"><span class="swatch" style="background:${item.color}"></span>${item.label}</span>`,
      )
      .join("");
    const hiddenNote =
      viewState.hidden.length > 0
        ? `<button id="unhide-all" class="mini">unhide ${viewState.hidden.length}</button>`
        : "";
    legendHost.innerHTML = legend + hiddenNote;
    document.getElementById("unhide-all")?.addEventListener("click", () => {
      viewState = { ...viewState, hidden: [] };
      refreshGraph();
    });

    const svg = graphHost.querySelector("svg");
    svg?.addEventListener("click", (event) => {
      const group = (event.target as Element).closest("[data-node]");
      if (group === null) {
        return;
      }
      const id = group.getAttribute("data-node") ?? "";
      if (event.shiftKey) {
        if (selection.has(id)) {
          selection.delete(id);
        } else {
          selection.add(id);
        }
        refreshGraph();
      } else if (event.altKey) {
        viewState = toggleHidden(viewState, id);
        refreshGraph();
      } else {
        highlightDeclaration(id);
      }
    });
  };

  const highlightDeclaration = (nodeId: string): void => {
    if (graphDoc === null) {
      return;
    }
    const node = graphDoc.nodes.find((n) => n.id === nodeId);
    if (node === undefined) {
      return;
    }
    const lines = specEditor.value.split("\n");
    const needle =
      node.kind === "trigger" ? /^\s*trigger\b/ : new RegExp(`^\\s*(input|output)\\s+${node.name}\\b`);
    let offset = 0;
    for (const line of lines) {
      if (needle.test(line)) {
        specEditor.focus();
        specEditor.setSelectionRange(offset, offset + line.length);
        return;
      }
      offset += line.length + 1;
    }
  };

  const analyzeNow = async (): Promise<void> => {
    statusBar.textContent = "analyzing…";
    try {
      const source = specEditor.value;
      const reply = await client.analyze(source);
      if (reply.stale) {
        return; // a newer edit's result is on its way
      }
      if (!reply.response.ok || reply.result === undefined) {
        toast(reply.response.error?.message ?? "analysis request failed");
        return;
      }
      analysis = reply.result;
      refreshOverlay();
      statusBar.textContent = analysis.ok
        ? `ok · ${analysis.hints.length} streams`
        : `${analysis.diagnostics.filter((d) => d.severity === "error").length} error(s)`;
      if (analysis.ok) {
        const graphReply = await client.graph(source);
        if (!graphReply.stale && graphReply.response.ok && graphReply.result) {
          graphDoc = graphReply.result;
          selection = new Set();
          refreshGraph();
        }
      } else {
        graphDoc = null;
        refreshGraph();
      }
    } catch (err) {
      toast(`protocol failure: ${(err as Error).message}`);
    }
  };
  const analyzeSoon = debounce(() => void analyzeNow(), ANALYZE_DEBOUNCE_MS);

  specEditor.addEventListener("input", () => {
    refreshOverlay();
    save();
    analyzeSoon();
  });
  specEditor.addEventListener("scroll", () => {
    specOverlay.scrollTop = specEditor.scrollTop;
    specOverlay.scrollLeft = specEditor.scrollLeft;
  });
  traceEditor.addEventListener("input", save);

  /* ----- tabs -------------------------------------------------------- */

  for (const bar of document.querySelectorAll<HTMLElement>(".tabbar")) {
    bar.addEventListener("click", (event) => {
      const button = (event.target as Element).closest<HTMLButtonElement>("[data-tab]");
      if (button === null) {
        return;
      }
      for (const sibling of bar.querySelectorAll("[data-tab]")) {
        sibling.classList.toggle("active", sibling === button);
      }
      const panes = bar.parentElement?.querySelectorAll<HTMLElement>("[data-pane]") ?? [];
      for (const pane of panes) {
        pane.hidden = pane.getAttribute("data-pane") !== button.getAttribute("data-tab");
      }
    });
  }

  /* ----- graph toolbar ------------------------------------------------ */

  el<HTMLButtonElement>("view-toggle").addEventListener("click", () => {
    viewState = setMode(viewState, viewState.mode === "pacing" ? "memory" : "pacing");
    el<HTMLButtonElement>("view-toggle").textContent =
      viewState.mode === "pacing" ? "view: pacing" : "view: memory";
    save();
    refreshGraph();
  });
  el<HTMLButtonElement>("merge-btn").addEventListener("click", () => {
    if (graphDoc === null) {
      return;
    }
    try {
      viewState = mergeNodes(graphDoc, viewState, [...selection]);
      selection = new Set();
      refreshGraph();
    } catch (err) {
      if (err instanceof MergeError) {
        toast(err.message);
      } else {
        throw err;
      }
    }
  });
  el<HTMLButtonElement>("expand-btn").addEventListener("click", () => {
    viewState = expandAll(viewState);
    refreshGraph();
  });
  el<HTMLButtonElement>("zoom-in").addEventListener("click", () => {
    viewState = { ...viewState, zoom: Math.min(4, viewState.zoom * 1.25) };
    refreshGraph();
  });
  el<HTMLButtonElement>("zoom-out").addEventListener("click", () => {
    viewState = { ...viewState, zoom: Math.max(0.25, viewState.zoom / 1.25) };
    refreshGraph();
  });
  el<HTMLButtonElement>("zoom-reset").addEventListener("click", () => {
    viewState = { ...viewState, zoom: 1, panX: 0, panY: 0 };
    refreshGraph();
  });

  let dragging: { startX: number; startY: number; panX: number; panY: number } | null = null;
  graphHost.addEventListener("mousedown", (event) => {
    if ((event.target as Element).closest("[data-node]") !== null) {
      return; // node clicks select/highlight instead of panning
    }
    dragging = {
      startX: event.clientX,
      startY: event.clientY,
      panX: viewState.panX,
      panY: viewState.panY,
    };
  });
  window.addEventListener("mousemove", (event) => {
    if (dragging === null) {
      return;
    }
    viewState = {
      ...viewState,
      panX: dragging.panX + (event.clientX - dragging.startX),
      panY: dragging.panY + (event.clientY - dragging.startY),
    };
    refreshGraph();
  });
  window.addEventListener("mouseup", () => {
    dragging = null;
  });

  /* ----- batch run + plot --------------------------------------------- */

  const verdictsMode = (): VerdictModeName =>
    el<HTMLSelectElement>("verdicts-mode").value as VerdictModeName;

  const refreshPlot = (): void => {
    if (lastRun === null || !hasPlottableData(lastRun.plot)) {
      plotHost.innerHTML = '<p class="placeholder">no plottable streams</p>';
      plotLegend.innerHTML = "";
      return;
    }
    plotHost.innerHTML = renderToString(renderPlot(lastRun.plot, hiddenSeries));
    plotLegend.innerHTML = lastRun.plot.series
      .map((series, index) => {
        const off = hiddenSeries.has(series.stream) ? " off" : "";
        return `<button class="legend-item toggle${off}" data-series="${series.stream}"><span class="swatch" style="background:${seriesColor(index)}"></span>${series.stream}</button>`;
      })
      .join("");
    for (const button of plotLegend.querySelectorAll<HTMLButtonElement>("[data-series]")) {
      button.addEventListener("click", () => {
        const name = button.getAttribute("data-series") ?? "";
        if (hiddenSeries.has(name)) {
          hiddenSeries.delete(name);
        } else {
          hiddenSeries.add(name);
        }
        refreshPlot();
      });
    }
  };

  el<HTMLButtonElement>("run-btn").addEventListener("click", () => {
    void (async () => {
      statusBar.textContent = "running…";
      try {
        const reply = await client.run(specEditor.value, traceEditor.value, verdictsMode());
        if (reply.stale) {
          return;
        }
        if (!reply.response.ok || reply.result === undefined) {
          const error = reply.response.error;
          outputPre.textContent = error
            ? `error: ${error.message}\n` +
              JSON.stringify(error.analysis ?? error.trace ?? {}, null, 2)
            : "run failed";
          statusBar.textContent = "run failed";
          return;
        }
        lastRun = reply.result;
        hiddenSeries = new Set();
        outputPre.textContent = lastRun.text;
        refreshPlot();
        statusBar.textContent = lastRun.fault
          ? `fault ${lastRun.fault.code} at t=${lastRun.fault.time}`
          : `${lastRun.verdicts.length} verdicts`;
      } catch (err) {
        toast(`protocol failure: ${(err as Error).message}`);
      }
    })();
  });

  /* ----- step debugging ------------------------------------------------ */

  const renderVerdictLine = (v: VerdictJson): string => {
    const values = Object.entries(v.values)
      .map(([name, value]) => `${name}=${JSON.stringify(value)}`)
      .join(" ");
    const fired = v.fired
      .map((f) => `  ! Trigger ${f.index}: ${f.message}`)
      .join("");
    return `t=${v.time} ${v.kind} ${values}${fired}`;
  };

  const refreshSessionState = async (): Promise<void> => {
    const reply = await client.sessionState();
    if (!reply.response.ok || reply.result === undefined) {
      stateHost.innerHTML = "";
      return;
    }
    const state: SessionStateResult = reply.result;
    const rows = state.streams
      .map((stream) => {
        const cells = stream.buffer
          .map((slot) => `<td>#${slot.seq} ${JSON.stringify(slot.value)}</td>`)
          .join("");
        return `<tr><th>${stream.name}</th>${cells}</tr>`;
      })
      .join("");
    stateHost.innerHTML = `<p>time=${state.time ?? "—"}</p><table>${rows}</table>`;
  };

  const stepButtons = (): void => {
    el<HTMLButtonElement>("step-btn").disabled = !sessionLive || sessionExhausted;
    el<HTMLButtonElement>("step-10-btn").disabled = !sessionLive || sessionExhausted;
    el<HTMLButtonElement>("step-reset-btn").disabled = !sessionLive;
  };

  const takeSteps = async (n: number): Promise<void> => {
    const reply = await client.sessionStep(n);
    if (!reply.response.ok || reply.result === undefined) {
      toast(reply.response.error?.message ?? "step failed");
      return;
    }
    const result: StepResult = reply.result;
    for (const verdict of result.verdicts) {
      stepLog.textContent += renderVerdictLine(verdict) + "\n";
    }
    if (result.fault !== null) {
      stepLog.textContent += `fault ${result.fault.code} at t=${result.fault.time} in '${result.fault.stream}': ${result.fault.message}\n`;
      sessionExhausted = true;
    }
    if (result.exhausted) {
      stepLog.textContent += "(trace exhausted)\n";
      sessionExhausted = true;
    }
    stepLog.scrollTop = stepLog.scrollHeight;
    stepButtons();
    await refreshSessionState();
  };

  el<HTMLButtonElement>("session-btn").addEventListener("click", () => {
    void (async () => {
      const reply = await client.sessionStart(
        specEditor.value,
        traceEditor.value,
        verdictsMode(),
      );
      if (!reply.response.ok) {
        toast(reply.response.error?.message ?? "session.start failed");
        return;
      }
      sessionLive = true;
      sessionExhausted = false;
      stepLog.textContent = "";
      stateHost.innerHTML = "";
      stepButtons();
    })();
  });
  el<HTMLButtonElement>("step-btn").addEventListener("click", () => void takeSteps(1));
  el<HTMLButtonElement>("step-10-btn").addEventListener("click", () => void takeSteps(10));
  el<HTMLButtonElement>("step-reset-btn").addEventListener("click", () => {
    void (async () => {
      await client.sessionReset();
      sessionExhausted = false;
      stepLog.textContent = "";
      stateHost.innerHTML = "";
      stepButtons();
    })();
  });

  stepButtons();
  refreshOverlay();
  void analyzeNow();
}

document.addEventListener("DOMContentLoaded", main);
