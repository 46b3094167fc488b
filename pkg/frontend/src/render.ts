/**
 * SVG rendering of the dependency graph in its two view modes.
 *
 * The contract the tests pin down: switching between the pacing view and the
 * memory view repaints — fill, stroke, stroke-width — and changes nothing
 * else.  Topology, labels, tooltips, geometry, and ids are computed from the
 * view model alone, so the two renderings differ only in paint attributes.
 */

import type { GraphResult } from "./protocol.js";
import type { GraphViewState, ViewEdge, ViewGraph, ViewNode } from "./graphState.js";
import { viewModel } from "./graphState.js";
import { layoutView, type Layout, type Point } from "./layout.js";
import { h, type VNode } from "./svg.js";

/** Attributes allowed to change when the view mode flips. */
export const PAINT_ATTRS: ReadonlySet<string> = new Set([
  "fill",
  "stroke",
  "stroke-width",
]);

/** Qualitative palette for pacing classes (distinct hues). */
export const PACING_PALETTE = [
  "#4e79a7",
  "#f28e2b",
  "#59a14f",
  "#e15759",
  "#b07aa1",
  "#76b7b2",
  "#edc948",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
] as const;

/** Sequential palette for memory bounds (light → dark). */
export const MEMORY_PALETTE = [
  "#deebf7",
  "#c6dbef",
  "#9ecae1",
  "#6baed6",
  "#4292c6",
  "#2171b5",
  "#08519c",
  "#08306b",
] as const;

const MERGED_FILL = "#d9d9e3";
const NODE_W = 128;
const NODE_H = 36;

/** Stable color key: pacing classes sorted, then indexed into the palette. */
export function pacingColor(doc: GraphResult, pacingClass: string): string {
  const classes = [...new Set(doc.nodes.map((n) => n.pacingClass))].sort();
  const index = classes.indexOf(pacingClass);
  return PACING_PALETTE[
    (index >= 0 ? index : 0) % PACING_PALETTE.length
  ] as string;
}

export function memoryColor(bound: number): string {
  const index = Math.max(0, Math.min(MEMORY_PALETTE.length - 1, bound - 1));
  return MEMORY_PALETTE[index] as string;
}

const EDGE_COLORS: Record<string, string> = {
  sync: "#555566",
  offset: "#8a5a00",
  hold: "#666688",
  window: "#2a7a2a",
  mixed: "#555566",
};

export function edgeColor(kind: string): string {
  return EDGE_COLORS[kind] ?? "#555566";
}

export interface LegendItem {
  label: string;
  color: string;
}

/** Legend for the current mode; rendered outside the SVG by the app shell. */
export function legendItems(doc: GraphResult, mode: "pacing" | "memory"): LegendItem[] {
  if (mode === "pacing") {
    const seen = new Map<string, string>();
    for (const node of doc.nodes) {
      if (!seen.has(node.pacingClass)) {
        seen.set(node.pacingClass, node.pacing);
      }
    }
    return [...seen.keys()].sort().map((key) => ({
      label: seen.get(key) ?? key,
      color: pacingColor(doc, key),
    }));
  }
  const bounds = [...new Set(doc.nodes.map((n) => n.memoryBound))].sort(
    (a, b) => a - b,
  );
  return bounds.map((bound) => ({
    label: `bound ${bound}`,
    color: memoryColor(bound),
  }));
}

export interface RenderOptions {
  /** View-node ids currently selected (for the merge workflow). */
  selected?: ReadonlySet<string>;
}

interface NodePaint {
  fill: string;
  stroke: string;
  strokeWidth: string;
}

function nodePaint(
  doc: GraphResult,
  state: GraphViewState,
  node: ViewNode,
  selected: boolean,
): NodePaint {
  const stroke = selected ? "#cc3311" : "#30304a";
  const strokeWidth = selected ? "3" : "1.4";
  if (node.node === undefined) {
    // merged pseudo-node: neutral in pacing mode, deepest member in memory mode
    if (state.mode === "pacing") {
      return { fill: MERGED_FILL, stroke, strokeWidth };
    }
    let bound = 1;
    for (const member of node.members ?? []) {
      const original = doc.nodes.find((n) => n.id === member);
      bound = Math.max(bound, original?.memoryBound ?? 1);
    }
    return { fill: memoryColor(bound), stroke, strokeWidth };
  }
  const fill =
    state.mode === "pacing"
      ? pacingColor(doc, node.node.pacingClass)
      : memoryColor(node.node.memoryBound);
  return { fill, stroke, strokeWidth };
}

function nodeTitle(node: ViewNode): string {
  if (node.node === undefined) {
    return `merged: ${(node.members ?? []).join(", ")}`;
  }
  const n = node.node;
  return `${n.name}: ${n.valueType} ${n.pacing} · bound ${n.memoryBound}`;
}

function edgeLabel(edge: ViewEdge): string {
  const base =
    edge.kind === "offset" && edge.parts.length === 1
      ? `offset ${-(edge.parts[0]?.weight ?? 0)}`
      : edge.kind;
  return edge.multiplicity > 1 ? `${base} ×${edge.multiplicity}` : base;
}

function shorten(from: Point, to: Point): { x1: number; y1: number; x2: number; y2: number } {
  const dx = to.x - from.x;
  const dy = to.y - from.y;
  const len = Math.hypot(dx, dy) || 1;
  const trimFrom = NODE_H * 0.68;
  const trimTo = NODE_H * 0.78;
  return {
    x1: from.x + (dx / len) * trimFrom,
    y1: from.y + (dy / len) * trimFrom,
    x2: to.x - (dx / len) * trimTo,
    y2: to.y - (dy / len) * trimTo,
  };
}

function fmt(value: number): string {
  return String(Math.round(value * 100) / 100);
}

function renderEdge(
  edge: ViewEdge,
  layout: Layout,
  mode: "pacing" | "memory",
): VNode {
  const from = layout.positions.get(edge.from) ?? { x: 0, y: 0 };
  const to = layout.positions.get(edge.to) ?? { x: 0, y: 0 };
  const { x1, y1, x2, y2 } = shorten(from, to);
  const width = mode === "memory" ? edge.thickness : 1.5;
  const line = h("line", {
    "data-edge": `${edge.from}->${edge.to}`,
    "data-kind": edge.kind,
    x1: fmt(x1),
    y1: fmt(y1),
    x2: fmt(x2),
    y2: fmt(y2),
    stroke: edgeColor(edge.kind),
    "stroke-width": String(width),
    "marker-end": "url(#arrow)",
    ...(edge.kind === "hold" || edge.kind === "window"
      ? { "stroke-dasharray": edge.kind === "hold" ? "6 3" : "2 3" }
      : {}),
  });
  const label = h(
    "text",
    {
      class: "edge-label",
      x: fmt((x1 + x2) / 2 + 6),
      y: fmt((y1 + y2) / 2 - 4),
      fill: "#707080",
    },
    [edgeLabel(edge)],
  );
  return h("g", { class: "edge" }, [line, label]);
}

function renderNode(
  doc: GraphResult,
  state: GraphViewState,
  node: ViewNode,
  position: Point,
  selected: boolean,
): VNode {
  const paint = nodePaint(doc, state, node, selected);
  const radius = node.kind === "trigger" ? 18 : node.kind === "merged" ? 10 : 5;
  const rect = h("rect", {
    x: fmt(position.x - NODE_W / 2),
    y: fmt(position.y - NODE_H / 2),
    width: String(NODE_W),
    height: String(NODE_H),
    rx: String(radius),
    fill: paint.fill,
    stroke: paint.stroke,
    "stroke-width": paint.strokeWidth,
    ...(node.kind === "merged" ? { "stroke-dasharray": "5 3" } : {}),
  });
  const label = h(
    "text",
    {
      class: "node-label",
      x: fmt(position.x),
      y: fmt(position.y + 4),
      "text-anchor": "middle",
      fill: "#15151f",
    },
    [node.label],
  );
  return h(
    "g",
    {
      class: `node node-${node.kind}`,
      "data-node": node.id,
      "data-kind": node.kind,
    },
    [h("title", {}, [nodeTitle(node)]), rect, label],
  );
}

/**
 * Render the full graph SVG.  The element tree depends only on the view
 * model and layout; `state.mode` influences nothing but paint attributes.
 */
export function renderGraph(
  doc: GraphResult,
  state: GraphViewState,
  options: RenderOptions = {},
): VNode {
  const view: ViewGraph = viewModel(doc, state);
  const layout = layoutView(doc, view);
  const selected = options.selected ?? new Set<string>();

  const defs = h("defs", {}, [
    h(
      "marker",
      {
        id: "arrow",
        viewBox: "0 0 10 10",
        refX: "9",
        refY: "5",
        markerWidth: "7",
        markerHeight: "7",
        orient: "auto-start-reverse",
      },
      [h("path", { d: "M 0 0 L 10 5 L 0 10 z", fill: "#555566" })],
    ),
  ]);

  const edges = view.edges.map((edge) => renderEdge(edge, layout, state.mode));
  const nodes = view.nodes.map((node) =>
    renderNode(
      doc,
      state,
      node,
      layout.positions.get(node.id) ?? { x: 0, y: 0 },
      selected.has(node.id),
    ),
  );

  const transform = `translate(${fmt(state.panX)} ${fmt(state.panY)}) scale(${fmt(
    state.zoom,
  )})`;
  return h(
    "svg",
    {
      xmlns: "http://www.w3.org/2000/svg",
      viewBox: `0 0 ${fmt(layout.width)} ${fmt(layout.height)}`,
      "data-view": "dependency-graph",
      class: "graph-svg",
    },
    [defs, h("g", { class: "viewport", transform }, [...edges, ...nodes])],
  );
}
