import { describe, expect, test } from "vitest";

import {
  boxesOverlap,
  cellBox,
  colorForScore,
  heatmapCells,
  highlightBoxes,
  renderHeatmapHtml,
} from "../src/heatmap.js";
import type { AlertRecord, HeatmapDoc } from "../src/types.js";

const doc: HeatmapDoc = {
  region: { x1: 0, y1: 0, x2: 5, y2: 3 },
  cell_size: 2,
  width: 3,
  height: 2,
  raw: [1, 2, 3, 4, 5, 6],
  scores: [0, 0.2, 0.4, 0.6, 0.8, 1],
  missing_quantities: false,
};

describe("colorForScore", () => {
  test("zero is green and one is red", () => {
    expect(colorForScore(0)).toBe("hsl(120, 72%, 46%)");
    expect(colorForScore(1)).toBe("hsl(0, 72%, 46%)");
  });

  test("out-of-range scores clamp", () => {
    expect(colorForScore(-3)).toBe(colorForScore(0));
    expect(colorForScore(9)).toBe(colorForScore(1));
  });
});

describe("cellBox", () => {
  test("interior cell", () => {
    expect(cellBox(doc, 1, 0)).toEqual({ x1: 2, y1: 0, x2: 3, y2: 1 });
  });

  test("edge cells clip to the region", () => {
    const ragged: HeatmapDoc = { ...doc, region: { x1: 0, y1: 0, x2: 4, y2: 2 } };
    expect(cellBox(ragged, 2, 1)).toEqual({ x1: 4, y1: 2, x2: 4, y2: 2 });
  });
});

describe("heatmapCells", () => {
  test("display order is top row first", () => {
    const cells = heatmapCells(doc);
    expect(cells.map((c) => c.raw)).toEqual([4, 5, 6, 1, 2, 3]);
    expect(cells[0]).toMatchObject({ hx: 0, hy: 1 });
  });

  test("cells under an alert area are highlighted", () => {
    const highlighted = heatmapCells(doc, [{ x1: 0, y1: 0, x2: 1, y2: 1 }]);
    const byCell = new Map(highlighted.map((c) => [`${c.hx},${c.hy}`, c.highlighted]));
    expect(byCell.get("0,0")).toBe(true);
    expect(byCell.get("1,0")).toBe(false);
    expect(byCell.get("0,1")).toBe(false);
  });
});

describe("boxesOverlap", () => {
  test("touching corners overlap, disjoint boxes do not", () => {
    expect(boxesOverlap({ x1: 0, y1: 0, x2: 1, y2: 1 }, { x1: 1, y1: 1, x2: 2, y2: 2 })).toBe(true);
    expect(boxesOverlap({ x1: 0, y1: 0, x2: 1, y2: 1 }, { x1: 2, y1: 0, x2: 3, y2: 1 })).toBe(false);
  });
});

describe("highlightBoxes", () => {
  test("collects every measured area", () => {
    const alert: AlertRecord = {
      seq: 1,
      ruleId: "r",
      firedAt: 0,
      severity: "advisory",
      priority: 1,
      stakeholders: [],
      perArea: [
        { x1: 0, y1: 0, x2: 1, y2: 1, measured: 2 },
        { x1: 4, y1: 4, x2: 5, y2: 5, measured: 3 },
      ],
      xml: "",
    };
    expect(highlightBoxes([alert])).toEqual([
      { x1: 0, y1: 0, x2: 1, y2: 1 },
      { x1: 4, y1: 4, x2: 5, y2: 5 },
    ]);
  });
});

describe("renderHeatmapHtml", () => {
  test("one div per cell with the grid sized to the raster", () => {
    const html = renderHeatmapHtml(doc);
    expect(html).toContain("repeat(3,1fr)");
    expect(html.match(/heat-cell/g)).toHaveLength(6);
    expect(html).not.toContain("Some clauses");
  });

  test("flags rasters missing energy figures", () => {
    const html = renderHeatmapHtml({ ...doc, missing_quantities: true });
    expect(html).toContain("no energy figures");
  });

  test("highlighted cells carry the hl class", () => {
    const html = renderHeatmapHtml(doc, [{ x1: 0, y1: 0, x2: 5, y2: 3 }]);
    expect(html.match(/heat-cell hl/g)).toHaveLength(6);
  });
});
