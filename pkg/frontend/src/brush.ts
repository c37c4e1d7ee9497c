import type { ScaleLinear } from "d3";
import type { FilterSpec } from "./payloads.js";

export interface BrushAxis {
  attr: string;
  scale: ScaleLinear<number, number>; // data domain -> pixel range
}

/**
 * Inverse-maps a pixel brush on one axis to a range filter. An inverted
 * drag is normalized so lo <= hi; a zero-width brush is a no-op (null).
 * Brushing the full pixel range yields the exact domain endpoints.
 */
export function brushToFilter(
  axis: BrushAxis,
  pixelRange: [number, number],
): Extract<FilterSpec, { kind: "range" }> | null {
  const [p0, p1] = pixelRange;
  if (!Number.isFinite(p0) || !Number.isFinite(p1) || p0 === p1) {
    return null;
  }
  const a = axis.scale.invert(p0);
  const b = axis.scale.invert(p1);
  return { kind: "range", attr: axis.attr, lo: Math.min(a, b), hi: Math.max(a, b) };
}
