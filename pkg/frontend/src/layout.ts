/**
 * Deterministic layered layout for the dependency graph: inputs on the top
 * layer, triggers on the bottom, everything else ranked by its longest
 * producer chain.  Edges in the document point from the accessing stream to
 * the accessed one, so a node sits strictly below everything it reads
 * (cycles — possible through offsets — are cut by capping the relaxation).
 */

import type { GraphResult } from "./protocol.js";
import type { ViewGraph } from "./graphState.js";

export interface Point {
  x: number;
  y: number;
}

export interface Layout {
  /** Position of each drawn node, keyed by view-node id. */
  positions: Map<string, Point>;
  width: number;
  height: number;
}

const H_SPACING = 150;
const V_SPACING = 95;
const MARGIN = 55;

/** Longest-path rank per original node id (inputs 0, triggers at the bottom). */
export function rankNodes(doc: GraphResult): Map<string, number> {
  const rank = new Map<string, number>();
  for (const node of doc.nodes) {
    rank.set(node.id, 0);
  }
  // Relax "consumer is below producer" |V| times; offset cycles stop moving
  // once every node has been pushed past its producers or the cap is hit.
  for (let pass = 0; pass < doc.nodes.length; pass++) {
    let moved = false;
    for (const edge of doc.edges) {
      const wanted = (rank.get(edge.to) ?? 0) + 1;
      if ((rank.get(edge.from) ?? 0) < wanted) {
        rank.set(edge.from, wanted);
        moved = true;
      }
    }
    if (!moved) {
      break;
    }
  }
  let deepest = 0;
  for (const value of rank.values()) {
    deepest = Math.max(deepest, value);
  }
  for (const node of doc.nodes) {
    if (node.kind === "trigger") {
      rank.set(node.id, deepest + 1);
    } else if (node.kind === "input") {
      rank.set(node.id, 0);
    }
  }
  return rank;
}

/** Lay out the drawn nodes of a view graph. */
export function layoutView(doc: GraphResult, view: ViewGraph): Layout {
  const baseRank = rankNodes(doc);
  const viewRank = new Map<string, number>();
  for (const node of view.nodes) {
    if (node.members !== undefined) {
      let r = 0;
      for (const member of node.members) {
        r = Math.max(r, baseRank.get(member) ?? 0);
      }
      viewRank.set(node.id, r);
    } else {
      viewRank.set(node.id, baseRank.get(node.id) ?? 0);
    }
  }

  // Compact ranks so hiding a whole layer doesn't leave a gap.
  const used = [...new Set(viewRank.values())].sort((a, b) => a - b);
  const compact = new Map(used.map((r, i) => [r, i]));

  const layers = new Map<number, string[]>();
  for (const node of view.nodes) {
    const r = compact.get(viewRank.get(node.id) ?? 0) ?? 0;
    const layer = layers.get(r);
    if (layer === undefined) {
      layers.set(r, [node.id]);
    } else {
      layer.push(node.id);
    }
  }

  let widest = 1;
  for (const layer of layers.values()) {
    widest = Math.max(widest, layer.length);
  }
  const width = Math.max(560, widest * H_SPACING + MARGIN);
  const height = Math.max(300, (layers.size - 1) * V_SPACING + 2 * MARGIN);

  const positions = new Map<string, Point>();
  for (const [r, ids] of layers) {
    const step = width / (ids.length + 1);
    ids.forEach((id, i) => {
      positions.set(id, { x: step * (i + 1), y: MARGIN + r * V_SPACING });
    });
  }
  return { positions, width, height };
}
