import * as d3 from "d3";
import type { HistoryPayload } from "./payloads.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface HistoryOptions {
  onSelect?: (nodeId: number) => void;
  stepX?: number;
  stepY?: number;
  nodeRadius?: number;
}

/**
 * The exploration-history tree as nested SVG: one circle per node laid
 * out by depth, edges colored by how many rows survived the transition
 * (relative to the root), the current node ringed. Clicking a node asks
 * the host to replay it.
 */
export function renderHistoryTree(payload: HistoryPayload, options: HistoryOptions = {}): SVGGElement {
  const stepX = options.stepX ?? 60;
  const stepY = options.stepY ?? 32;
  const r = options.nodeRadius ?? 7;

  const depth = new Map<number, number>([[payload.root, 0]]);
  const byParent = new Map<number, number[]>();
  for (const node of payload.nodes) {
    if (node.parent !== null) {
      depth.set(node.id, (depth.get(node.parent) ?? 0) + 1);
      const sibs = byParent.get(node.parent) ?? [];
      sibs.push(node.id);
      byParent.set(node.parent, sibs);
    }
  }
  const rows = new Map<number, number>();
  const pos = new Map<number, [number, number]>();
  for (const node of payload.nodes) {
    const d = depth.get(node.id) ?? 0;
    const row = rows.get(d) ?? 0;
    rows.set(d, row + 1);
    pos.set(node.id, [d * stepX, row * stepY]);
  }

  const rootCount = payload.nodes[payload.root]?.retainedCount ?? 1;
  const edgeColor = (count: number) =>
    d3.interpolateRgb("#c8c8c8", "#1a5fb4")(rootCount > 0 ? count / rootCount : 0);

  const g = document.createElementNS(SVG_NS, "g");
  g.setAttribute("class", "history-tree");

  for (const edge of payload.edges) {
    const [x1, y1] = pos.get(edge.from) ?? [0, 0];
    const [x2, y2] = pos.get(edge.to) ?? [0, 0];
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(x1));
    line.setAttribute("y1", String(y1));
    line.setAttribute("x2", String(x2));
    line.setAttribute("y2", String(y2));
    line.setAttribute("stroke", edgeColor(edge.retainedCount));
    line.setAttribute("stroke-width", "2");
    line.setAttribute("data-role", "edge");
    line.setAttribute("data-retained", String(edge.retainedCount));
    g.appendChild(line);
  }

  for (const node of payload.nodes) {
    const [x, y] = pos.get(node.id) ?? [0, 0];
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(x));
    circle.setAttribute("cy", String(y));
    circle.setAttribute("r", String(r));
    circle.setAttribute("fill", node.id === payload.currentNode ? "#1a5fb4" : "#ffffff");
    circle.setAttribute("stroke", "#1a5fb4");
    circle.setAttribute("data-role", "node");
    circle.setAttribute("data-id", String(node.id));
    if (node.id === payload.currentNode) circle.setAttribute("data-current", "true");
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent =
      `${node.retainedCount} rows` +
      (node.topVariationAttr ? `, top variation ${node.topVariationAttr.attr}` : "");
    circle.appendChild(title);
    if (options.onSelect) {
      const cb = options.onSelect;
      circle.addEventListener("click", () => cb(node.id));
    }
    g.appendChild(circle);
  }
  return g;
}
