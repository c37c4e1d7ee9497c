import * as d3 from "d3";
import type { HeatmapCell } from "./payloads.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export const LOW_COLOR = "#ffffe0"; // light yellow, colorScalar 0
export const HIGH_COLOR = "#2171b5"; // blue, colorScalar 1

const ramp = d3.interpolateRgb(LOW_COLOR, HIGH_COLOR);

export function cellFill(colorScalar: number): string {
  return ramp(Math.max(0, Math.min(1, colorScalar)));
}

export interface CellOptions {
  size?: number;
}

/**
 * One heatmap cell as an SVG group centered on the origin. Shape encodes
 * provenance (rect observed, triangle imputed, circle predicted) exactly
 * as the server sent it; circle radius scales with trustworthiness; the
 * tooltip carries the exact value.
 */
export function renderHeatmapCell(cell: HeatmapCell, options: CellOptions = {}): SVGGElement {
  const size = options.size ?? 18;
  const half = size / 2;

  const g = document.createElementNS(SVG_NS, "g");
  g.setAttribute("class", "heatmap-cell");
  g.setAttribute("data-attr", cell.attr);
  if (cell.provenance) g.setAttribute("data-provenance", cell.provenance);

  if (cell.shape === null || cell.value === null) {
    const stub = document.createElementNS(SVG_NS, "rect");
    stub.setAttribute("x", String(-half));
    stub.setAttribute("y", "-1");
    stub.setAttribute("width", String(size));
    stub.setAttribute("height", "2");
    stub.setAttribute("fill", "#e0e0e0");
    stub.setAttribute("data-role", "empty");
    g.appendChild(stub);
    return g;
  }

  const fill = cellFill(cell.colorScalar ?? 0.5);
  let node: SVGElement;
  if (cell.shape === "circle") {
    node = document.createElementNS(SVG_NS, "circle");
    const scalar = cell.radiusScalar ?? 1.0;
    node.setAttribute("r", String(half * scalar));
    node.setAttribute("data-radius-scalar", String(scalar));
  } else if (cell.shape === "triangle") {
    node = document.createElementNS(SVG_NS, "polygon");
    node.setAttribute("points", `0,${-half} ${half},${half} ${-half},${half}`);
  } else {
    node = document.createElementNS(SVG_NS, "rect");
    node.setAttribute("x", String(-half));
    node.setAttribute("y", String(-half));
    node.setAttribute("width", String(size));
    node.setAttribute("height", String(size));
    node.setAttribute("rx", "2");
  }
  node.setAttribute("fill", fill);
  node.setAttribute("data-role", "shape");
  const title = document.createElementNS(SVG_NS, "title");
  title.textContent = `${cell.attr}: ${cell.value}`;
  node.appendChild(title);
  g.appendChild(node);
  return g;
}
