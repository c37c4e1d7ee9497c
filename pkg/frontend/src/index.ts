export { brushToFilter, type BrushAxis } from "./brush.js";
export { clusterColor, renderGlyph, MIN_BAR_HEIGHT, type GlyphOptions } from "./glyph.js";
export { cellFill, renderHeatmapCell, LOW_COLOR, HIGH_COLOR, type CellOptions } from "./heatmap.js";
export { renderHistoryTree, type HistoryOptions } from "./history.js";
export { ViewState, type ApiRequest, type FragmentState, type UiEvent } from "./state.js";
export type * from "./payloads.js";
