import * as d3 from "d3";
import { brushToFilter, type BrushAxis } from "./brush.js";
import type { FilterSpec, GlyphPayload } from "./payloads.js";

export interface ApiRequest {
  method: "GET" | "POST";
  path: string;
  body?: unknown;
}

export type UiEvent =
  | { kind: "request"; request: ApiRequest }
  | { kind: "filter-cleared"; attr: string };

export interface FragmentState {
  sessionId: string;
  keyAttributes: string[];
  filters: FilterSpec[];
}

/**
 * Client-side mirror of one server session. Holds only gesture state
 * (brushes, lasso, reference, comparison picks); every gesture maps to
 * exactly one API request descriptor and all analytics stay server-side.
 *
 * Discovery responses are guarded by a sequence number: only the answer
 * to the most recently issued request may be applied, so a slow earlier
 * response can never overwrite a newer scene.
 */
export class ViewState {
  readonly sessionId: string;
  keyAttributes: string[];
  readonly brushes = new Map<string, [number, number]>();
  lassoPolygon: [number, number][] | null = null;
  reference: { refId: string; topN: number } | null = null;
  comparisonIds: string[] = [];
  private appliedFilters: FilterSpec[] = [];
  private discoverySeq = 0;

  constructor(sessionId: string, keyAttributes: string[] = []) {
    this.sessionId = sessionId;
    this.keyAttributes = [...keyAttributes];
  }

  private filterRequest(spec: FilterSpec): UiEvent {
    this.appliedFilters.push(spec);
    return {
      kind: "request",
      request: { method: "POST", path: `/sessions/${this.sessionId}/filter`, body: spec },
    };
  }

  /** Brush on one axis; a cleared or zero-width brush removes the filter. */
  brushGesture(axis: BrushAxis, pixelRange: [number, number] | null): UiEvent | null {
    const spec = pixelRange === null ? null : brushToFilter(axis, pixelRange);
    if (spec === null) {
      if (this.brushes.delete(axis.attr)) {
        return { kind: "filter-cleared", attr: axis.attr };
      }
      return null;
    }
    this.brushes.set(axis.attr, [spec.lo, spec.hi]);
    return this.filterRequest(spec);
  }

  /**
   * Lasso on the glyph scatter: hit-testing is point-in-polygon on glyph
   * centers, and the contained ids become one cluster filter.
   */
  lassoGesture(
    polygon: [number, number][],
    glyphs: GlyphPayload[],
    project: (position: [number, number]) => [number, number],
  ): UiEvent | null {
    this.lassoPolygon = polygon;
    const ids = glyphs
      .filter((g) => d3.polygonContains(polygon, project(g.position)))
      .map((g) => g.id);
    if (ids.length === 0) return null;
    return this.filterRequest({ kind: "cluster", ids });
  }

  referenceGesture(refId: string, topN: number): UiEvent {
    this.reference = { refId, topN };
    return this.filterRequest({ kind: "reference", refId, topN });
  }

  keyAttributesGesture(attrs: string[]): UiEvent {
    this.keyAttributes = [...attrs];
    return {
      kind: "request",
      request: {
        method: "POST",
        path: `/sessions/${this.sessionId}/key-attributes`,
        body: { attrs },
      },
    };
  }

  comparisonGesture(ids: string[]): UiEvent {
    this.comparisonIds = [...ids];
    return {
      kind: "request",
      request: {
        method: "GET",
        path: `/sessions/${this.sessionId}/comparison?ids=${encodeURIComponent(ids.join(","))}`,
      },
    };
  }

  discoveryGesture(): { event: UiEvent; seq: number } {
    this.discoverySeq += 1;
    return {
      event: {
        kind: "request",
        request: { method: "GET", path: `/sessions/${this.sessionId}/discovery` },
      },
      seq: this.discoverySeq,
    };
  }

  /** True iff this response answers the latest discovery request. */
  acceptDiscovery(seq: number): boolean {
    return seq === this.discoverySeq;
  }

  /** URL fragment carrying the full server session path. */
  toFragment(): string {
    const state: FragmentState = {
      sessionId: this.sessionId,
      keyAttributes: this.keyAttributes,
      filters: this.appliedFilters,
    };
    return "#" + encodeURIComponent(JSON.stringify(state));
  }

  static fromFragment(fragment: string): ViewState {
    const raw = fragment.startsWith("#") ? fragment.slice(1) : fragment;
    const state = JSON.parse(decodeURIComponent(raw)) as FragmentState;
    const view = new ViewState(state.sessionId, state.keyAttributes);
    view.appliedFilters = [...state.filters];
    return view;
  }

  /** Requests that replay the recorded filter path, in order. */
  replayRequests(): ApiRequest[] {
    return this.appliedFilters.map((spec) => ({
      method: "POST",
      path: `/sessions/${this.sessionId}/filter`,
      body: spec,
    }));
  }
}
