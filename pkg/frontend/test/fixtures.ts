import type { GlyphBar, GlyphPayload, HeatmapRow, HistoryPayload } from "../src/payloads.js";

function bars(spec: [string, number, "positive" | "negative"][]): GlyphBar[] {
  return spec.map(([factor, height, direction], order) => ({ factor, height, direction, order }));
}

// Three key attributes -> floor(15/3) = 5 bars per sector, 15 total.
export const THREE_SECTOR_GLYPH: GlyphPayload = {
  id: "MoS2",
  position: [0.31, 0.62],
  cluster: 0,
  sectors: [
    {
      attr: "energy_barrier",
      value: 0.5,
      bars: bars([
        ["elec_gap", 0.9, "positive"],
        ["elec_mass", 0.7, "negative"],
        ["therm_conduct", 0.55, "positive"],
        ["struct_lattice", 0.3, "negative"],
        ["mech_modulus", 0.1, "positive"],
      ]),
    },
    {
      attr: "elec_gap",
      value: 0.25,
      bars: bars([
        ["energy_barrier", 0.8, "negative"],
        ["struct_lattice", 0.6, "positive"],
        ["elec_mass", 0.4, "positive"],
        ["therm_conduct", 0.2, "negative"],
        ["mech_modulus", 0.0, "positive"], // zero height -> stub
      ]),
    },
    {
      attr: "therm_conduct",
      value: 0.25,
      bars: bars([
        ["elec_gap", 1.0, "positive"],
        ["energy_barrier", 0.65, "positive"],
        ["mech_modulus", 0.5, "negative"],
        ["elec_mass", 0.25, "positive"],
        ["struct_lattice", 0.05, "negative"],
      ]),
    },
  ],
};

// One row exercising each provenance/shape pairing the server emits.
export const PROVENANCE_ROW: HeatmapRow = {
  id: "WSe2",
  cells: [
    {
      attr: "elec_gap",
      value: 1.62,
      colorScalar: 0.4,
      shape: "rect",
      provenance: "observed",
    },
    {
      attr: "elec_mass",
      value: 0.44,
      colorScalar: 0.7,
      shape: "triangle",
      provenance: "imputed",
    },
    {
      attr: "energy_barrier",
      value: 0.91,
      colorScalar: 0.2,
      shape: "circle",
      provenance: "predicted",
      radiusScalar: 0.8,
    },
  ],
};

export const HISTORY_CHAIN: HistoryPayload = {
  nodes: [
    { id: 0, parent: null, filter: null, retainedCount: 20, topVariationAttr: null },
    {
      id: 1,
      parent: 0,
      filter: { kind: "range", attr: "elec_gap", lo: 1.2, hi: 1.8 },
      retainedCount: 11,
      topVariationAttr: null,
    },
    {
      id: 2,
      parent: 1,
      filter: { kind: "cluster", ids: ["MoS2", "WS2", "WSe2"] },
      retainedCount: 3,
      topVariationAttr: { attr: "therm_conduct", f: 8.4, infinite: false },
    },
    {
      id: 3,
      parent: 1,
      filter: { kind: "reference", refId: "MoS2", topN: 4 },
      retainedCount: 5,
      topVariationAttr: null,
    },
  ],
  edges: [
    { from: 0, to: 1, retainedCount: 11 },
    { from: 1, to: 2, retainedCount: 3 },
    { from: 1, to: 3, retainedCount: 5 },
  ],
  root: 0,
  currentNode: 2,
};
