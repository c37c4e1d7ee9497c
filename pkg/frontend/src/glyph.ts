import * as d3 from "d3";
import type { GlyphPayload, GlyphSector } from "./payloads.js";

const SVG_NS = "http://www.w3.org/2000/svg";

// Radial budget: pie disc out to PIE_RATIO * R, bars grow outward from
// there toward R or inward toward CORE_RATIO * R.
const PIE_RATIO = 0.6;
const CORE_RATIO = 0.3;

// A zero-height bar still gets a visible stub so its slot stays hoverable.
export const MIN_BAR_HEIGHT = 0.04;

// Sectors with value 0 would vanish from the pie; floor the angular
// weight so every key attribute keeps a pickable wedge.
const MIN_SECTOR_WEIGHT = 0.02;

export interface GlyphOptions {
  radius?: number;
  palette?: (cluster: number) => string;
}

export function clusterColor(cluster: number): string {
  const scheme = d3.schemeTableau10;
  return scheme[((cluster % scheme.length) + scheme.length) % scheme.length];
}

function isBadSector(s: GlyphSector): boolean {
  if (typeof s.attr !== "string" || typeof s.value !== "number" || !Array.isArray(s.bars)) {
    return true;
  }
  return s.bars.some(
    (b) =>
      typeof b.factor !== "string" ||
      typeof b.height !== "number" ||
      !Number.isFinite(b.height) ||
      (b.direction !== "positive" && b.direction !== "negative") ||
      typeof b.order !== "number",
  );
}

function malformed(glyph: GlyphPayload): string | null {
  if (typeof glyph !== "object" || glyph === null) return "not an object";
  if (typeof glyph.id !== "string") return "missing id";
  if (!Array.isArray(glyph.position) || glyph.position.length !== 2) return "bad position";
  if (!Array.isArray(glyph.sectors) || glyph.sectors.length === 0) return "no sectors";
  if (glyph.sectors.some(isBadSector)) return "bad sector";
  return null;
}

function placeholder(radius: number, id: string): SVGGElement {
  const g = document.createElementNS(SVG_NS, "g");
  g.setAttribute("class", "glyph glyph-placeholder");
  g.setAttribute("data-role", "placeholder");
  if (id) g.setAttribute("data-id", id);
  const c = document.createElementNS(SVG_NS, "circle");
  c.setAttribute("r", String(radius));
  c.setAttribute("fill", "#d0d0d0");
  c.setAttribute("stroke", "#909090");
  c.setAttribute("stroke-dasharray", "3 2");
  g.appendChild(c);
  return g;
}

/**
 * One compound as an SVG group centered on the origin: an inner pie over
 * the key attributes and an outer ring of influencing-factor bars, five
 * forces upstream having already placed it. The caller translates the
 * group to the glyph position.
 *
 * Bars fill their sector walking counterclockwise from its trailing
 * edge in significance order, so rank 0 is the first bar met going
 * counterclockwise. Negative-direction bars grow inward from the pie
 * edge and carry data-direction="inward".
 */
export function renderGlyph(glyph: GlyphPayload, options: GlyphOptions = {}): SVGGElement {
  const radius = options.radius ?? 24;
  const palette = options.palette ?? clusterColor;

  const reason = malformed(glyph);
  if (reason !== null) {
    console.error(`glyph ${(glyph && glyph.id) || "<unknown>"}: ${reason}`);
    return placeholder(radius, glyph && typeof glyph.id === "string" ? glyph.id : "");
  }

  const g = document.createElementNS(SVG_NS, "g");
  g.setAttribute("class", "glyph");
  g.setAttribute("data-id", glyph.id);
  g.setAttribute("data-cluster", String(glyph.cluster));

  const color = palette(glyph.cluster);
  const rPie = PIE_RATIO * radius;
  const rCore = CORE_RATIO * radius;
  const n = glyph.sectors.length;

  const slices = d3
    .pie<GlyphSector>()
    .sort(null)
    .value((s) => Math.max(s.value, MIN_SECTOR_WEIGHT))(glyph.sectors);

  const arc = d3.arc();
  for (let i = 0; i < slices.length; i++) {
    const slice = slices[i];
    const sector = slice.data;
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute(
      "d",
      arc({
        innerRadius: 0,
        outerRadius: rPie,
        startAngle: slice.startAngle,
        endAngle: slice.endAngle,
      }) ?? "",
    );
    path.setAttribute("data-role", "sector");
    path.setAttribute("data-attr", sector.attr);
    path.setAttribute("data-a0", String(slice.startAngle));
    path.setAttribute("data-a1", String(slice.endAngle));
    path.setAttribute("fill", color);
    path.setAttribute("fill-opacity", String(0.45 + (0.55 * (i + 1)) / n));
    path.setAttribute("stroke", "#ffffff");
    path.setAttribute("stroke-width", "0.5");
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${sector.attr}: ${sector.value}`;
    path.appendChild(title);
    g.appendChild(path);

    const k = sector.bars.length;
    if (k === 0) continue;
    const slot = (slice.endAngle - slice.startAngle) / k;
    const margin = 0.1 * slot;
    for (const bar of sector.bars) {
      const a1 = slice.endAngle - bar.order * slot - margin;
      const a0 = slice.endAngle - (bar.order + 1) * slot + margin;
      const h = Math.max(bar.height, MIN_BAR_HEIGHT);
      const inward = bar.direction === "negative";
      const r0 = inward ? rPie - h * (rPie - rCore) : rPie;
      const r1 = inward ? rPie : rPie + h * (radius - rPie);
      const el = document.createElementNS(SVG_NS, "path");
      el.setAttribute("d", arc({ innerRadius: r0, outerRadius: r1, startAngle: a0, endAngle: a1 }) ?? "");
      el.setAttribute("data-role", "bar");
      el.setAttribute("data-factor", bar.factor);
      el.setAttribute("data-order", String(bar.order));
      el.setAttribute("data-direction", inward ? "inward" : "outward");
      el.setAttribute("data-center", String((a0 + a1) / 2));
      el.setAttribute("data-r0", String(r0));
      el.setAttribute("data-r1", String(r1));
      el.setAttribute("fill", color);
      el.setAttribute("fill-opacity", inward ? "0.55" : "0.9");
      const tip = document.createElementNS(SVG_NS, "title");
      tip.textContent = `${bar.factor}: ${bar.height} (${bar.direction})`;
      el.appendChild(tip);
      g.appendChild(el);
    }
  }
  return g;
}
