/**
 * Plot rendering: one polyline per numeric/Bool stream, trigger firings as
 * vertical markers.  Axis ranges cover the *whole* dataset, hidden series
 * included, so toggling a series never rescales the rest.
 */

import type { PlotJson } from "./protocol.js";
import { h, type VNode } from "./svg.js";
import { PACING_PALETTE } from "./render.js";

const WIDTH = 720;
const HEIGHT = 280;
const PAD = { left: 52, right: 16, top: 14, bottom: 30 };

export function seriesColor(index: number): string {
  return PACING_PALETTE[index % PACING_PALETTE.length] as string;
}

interface Range {
  min: number;
  max: number;
}

function widen(range: Range): Range {
  if (range.min === Infinity) {
    return { min: 0, max: 1 };
  }
  if (range.min === range.max) {
    return { min: range.min - 1, max: range.max + 1 };
  }
  const slack = (range.max - range.min) * 0.06;
  return { min: range.min - slack, max: range.max + slack };
}

function dataRanges(plot: PlotJson): { x: Range; y: Range } {
  const x: Range = { min: Infinity, max: -Infinity };
  const y: Range = { min: Infinity, max: -Infinity };
  for (const series of plot.series) {
    for (const [t, v] of series.points) {
      if (Number.isFinite(t)) {
        x.min = Math.min(x.min, t);
        x.max = Math.max(x.max, t);
      }
      if (Number.isFinite(v)) {
        y.min = Math.min(y.min, v);
        y.max = Math.max(y.max, v);
      }
    }
  }
  for (const trigger of plot.triggers) {
    for (const t of trigger.times) {
      x.min = Math.min(x.min, t);
      x.max = Math.max(x.max, t);
    }
  }
  return { x: widen(x), y: widen(y) };
}

function ticks(range: Range, count: number): number[] {
  const out: number[] = [];
  for (let i = 0; i <= count; i++) {
    out.push(range.min + ((range.max - range.min) * i) / count);
  }
  return out;
}

function short(value: number): string {
  const rounded = Math.round(value * 1000) / 1000;
  return String(rounded);
}

export function hasPlottableData(plot: PlotJson): boolean {
  return plot.series.length > 0;
}

/** Render the plot; `hidden` holds stream names the user toggled off. */
export function renderPlot(
  plot: PlotJson,
  hidden: ReadonlySet<string> = new Set(),
): VNode {
  const { x, y } = dataRanges(plot);
  const sx = (t: number): number =>
    PAD.left + ((t - x.min) / (x.max - x.min)) * (WIDTH - PAD.left - PAD.right);
  const sy = (v: number): number =>
    HEIGHT - PAD.bottom - ((v - y.min) / (y.max - y.min)) * (HEIGHT - PAD.top - PAD.bottom);

  const children: VNode[] = [];

  // axes + gridlines
  const axis: VNode[] = [];
  for (const ty of ticks(y, 4)) {
    axis.push(
      h("line", {
        x1: String(PAD.left),
        y1: short(sy(ty)),
        x2: String(WIDTH - PAD.right),
        y2: short(sy(ty)),
        stroke: "#e3e3ea",
        "stroke-width": "1",
      }),
      h(
        "text",
        {
          x: String(PAD.left - 6),
          y: short(sy(ty) + 4),
          "text-anchor": "end",
          class: "tick",
          fill: "#707080",
        },
        [short(ty)],
      ),
    );
  }
  for (const tx of ticks(x, 6)) {
    axis.push(
      h(
        "text",
        {
          x: short(sx(tx)),
          y: String(HEIGHT - PAD.bottom + 18),
          "text-anchor": "middle",
          class: "tick",
          fill: "#707080",
        },
        [short(tx)],
      ),
    );
  }
  children.push(h("g", { class: "axes" }, axis));

  // trigger markers behind the series
  const markers: VNode[] = [];
  for (const trigger of plot.triggers) {
    for (const t of trigger.times) {
      markers.push(
        h(
          "g",
          { class: "trigger-marker", "data-trigger": String(trigger.index) },
          [
            h("title", {}, [`t=${short(t)}: ${trigger.message}`]),
            h("line", {
              x1: short(sx(t)),
              y1: String(PAD.top),
              x2: short(sx(t)),
              y2: String(HEIGHT - PAD.bottom),
              stroke: "#cc3311",
              "stroke-width": "1.5",
              "stroke-dasharray": "4 3",
            }),
            h("path", {
              d: `M ${short(sx(t) - 5)} ${PAD.top} L ${short(sx(t) + 5)} ${PAD.top} L ${short(sx(t))} ${PAD.top + 8} z`,
              fill: "#cc3311",
            }),
          ],
        ),
      );
    }
  }
  children.push(h("g", { class: "triggers" }, markers));

  // series
  plot.series.forEach((series, index) => {
    if (hidden.has(series.stream)) {
      return;
    }
    const color = seriesColor(index);
    const pts = series.points.filter(
      ([t, v]) => Number.isFinite(t) && Number.isFinite(v),
    );
    const polyline = h("polyline", {
      points: pts.map(([t, v]) => `${short(sx(t))},${short(sy(v))}`).join(" "),
      fill: "none",
      stroke: color,
      "stroke-width": "2",
    });
    const dots = pts.map(([t, v]) =>
      h("circle", {
        cx: short(sx(t)),
        cy: short(sy(v)),
        r: "3",
        fill: color,
      }, [h("title", {}, [`${series.stream} @ t=${short(t)}: ${short(v)}`])]),
    );
    children.push(
      h("g", { class: "series", "data-series": series.stream }, [
        polyline,
        ...dots,
      ]),
    );
  });

  return h(
    "svg",
    {
      xmlns: "http://www.w3.org/2000/svg",
      viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
      "data-view": "plot",
      class: "plot-svg",
    },
    children,
  );
}
