// Server payload shapes, field-for-field. The UI never derives analytics
// from these; it only draws them and maps gestures back to requests.

export interface SessionPayload {
  sessionId: string;
  retainedCount: number;
  attributes: string[];
  targets: string[];
  keyAttributes: string[];
  clusters: number;
  embedding: Record<string, [number, number]>;
}

export interface GlyphBar {
  factor: string;
  height: number; // [0, 1]
  direction: "positive" | "negative";
  order: number; // significance rank, 0 = strongest
}

export interface GlyphSector {
  attr: string;
  value: number; // [0, 1]
  bars: GlyphBar[];
}

export interface GlyphPayload {
  id: string;
  position: [number, number];
  cluster: number; // -1 = noise
  sectors: GlyphSector[];
}

export interface PolygonPayload {
  vertices: [number, number][];
  kind: "cluster" | "dummy";
  cluster: number | null;
  weight: number;
}

export interface DiscoveryPayload {
  glyphs: GlyphPayload[];
  polygons: PolygonPayload[];
  glyphRadius: number;
  omitted: string[];
  clusters: number;
  converged: boolean;
}

export type CellShape = "rect" | "triangle" | "circle";

export interface HeatmapCell {
  attr: string;
  value: number | null;
  colorScalar?: number | null;
  shape: CellShape | null;
  provenance?: "observed" | "imputed" | "predicted";
  radiusScalar?: number;
}

export interface HeatmapRow {
  id: string;
  cells: HeatmapCell[];
}

export interface ComparisonPayload {
  rows: HeatmapRow[];
  columns: { attr: string; group: string }[];
}

export type FilterSpec =
  | { kind: "range"; attr: string; lo: number; hi: number }
  | { kind: "cluster"; ids: string[] }
  | { kind: "reference"; refId: string; topN: number };

export interface VariationPayload {
  attr: string;
  f: number | null;
  infinite: boolean;
}

export interface HistoryNode {
  id: number;
  parent: number | null;
  filter: FilterSpec | null;
  retainedCount: number;
  topVariationAttr: VariationPayload | null;
}

export interface HistoryPayload {
  nodes: HistoryNode[];
  edges: { from: number; to: number; retainedCount: number }[];
  root: number;
  currentNode: number;
}
