import { describe, expect, it, vi } from "vitest";
import { renderHistoryTree } from "../src/history.js";
import { HISTORY_CHAIN } from "./fixtures.js";

describe("renderHistoryTree", () => {
  it("draws one circle per node and one line per edge", () => {
    const g = renderHistoryTree(HISTORY_CHAIN);
    expect(g.querySelectorAll('[data-role="node"]')).toHaveLength(4);
    expect(g.querySelectorAll('[data-role="edge"]')).toHaveLength(3);
  });

  it("encodes retained counts in edge color", () => {
    const g = renderHistoryTree(HISTORY_CHAIN);
    const strokes = [...g.querySelectorAll('[data-role="edge"]')].map((e) => ({
      retained: Number(e.getAttribute("data-retained")),
      stroke: e.getAttribute("stroke"),
    }));
    expect(new Set(strokes.map((s) => s.stroke)).size).toBe(3);
    const byRetained = [...strokes].sort((a, b) => a.retained - b.retained);
    expect(byRetained[0].stroke).not.toBe(byRetained[2].stroke);
  });

  it("marks the current node and replays a clicked one", () => {
    const onSelect = vi.fn();
    const g = renderHistoryTree(HISTORY_CHAIN, { onSelect });
    const current = g.querySelector('[data-current="true"]')!;
    expect(current.getAttribute("data-id")).toBe("2");
    const target = g.querySelector('[data-role="node"][data-id="3"]')! as SVGCircleElement;
    target.dispatchEvent(new MouseEvent("click"));
    expect(onSelect).toHaveBeenCalledWith(3);
  });
});
