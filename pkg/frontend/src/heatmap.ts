import type { AlertRecord, Box, HeatmapDoc } from "./types.js";
import { escapeHtml } from "./render.js";

/** Green through amber to red as the normalized score rises. */
export function colorForScore(score: number): string {
  const clamped = Math.min(Math.max(score, 0), 1);
  const hue = Math.round(120 * (1 - clamped));
  return `hsl(${hue}, 72%, 46%)`;
}

/** World-coordinate footprint of one heat cell, clipped to the region. */
export function cellBox(doc: HeatmapDoc, hx: number, hy: number): Box {
  const x1 = doc.region.x1 + hx * doc.cell_size;
  const y1 = doc.region.y1 + hy * doc.cell_size;
  return {
    x1,
    y1,
    x2: Math.min(x1 + doc.cell_size - 1, doc.region.x2),
    y2: Math.min(y1 + doc.cell_size - 1, doc.region.y2),
  };
}

export function boxesOverlap(a: Box, b: Box): boolean {
  return a.x1 <= b.x2 && b.x1 <= a.x2 && a.y1 <= b.y2 && b.y1 <= a.y2;
}

/** Regions worth highlighting on the map: the measured areas of the
 * given alerts plus any overlay boxes their reactions carry. */
export function highlightBoxes(alerts: AlertRecord[]): Box[] {
  const boxes: Box[] = [];
  for (const alert of alerts) {
    for (const area of alert.perArea) {
      boxes.push({ x1: area.x1, y1: area.y1, x2: area.x2, y2: area.y2 });
    }
  }
  return boxes;
}

export interface HeatCellView {
  hx: number;
  hy: number;
  raw: number;
  score: number;
  color: string;
  highlighted: boolean;
}

/** Cells in display order: top raster row first, left to right.  The
 * service stores rows bottom-first, index hy * width + hx. */
export function heatmapCells(doc: HeatmapDoc, highlights: Box[] = []): HeatCellView[] {
  const out: HeatCellView[] = [];
  for (let hy = doc.height - 1; hy >= 0; hy--) {
    for (let hx = 0; hx < doc.width; hx++) {
      const index = hy * doc.width + hx;
      const score = doc.scores[index] ?? 0;
      const footprint = cellBox(doc, hx, hy);
      out.push({
        hx,
        hy,
        raw: doc.raw[index] ?? 0,
        score,
        color: colorForScore(score),
        highlighted: highlights.some((box) => boxesOverlap(box, footprint)),
      });
    }
  }
  return out;
}

export function renderHeatmapHtml(doc: HeatmapDoc, highlights: Box[] = []): string {
  const cells = heatmapCells(doc, highlights)
    .map((cell) => {
      const classes = cell.highlighted ? "heat-cell hl" : "heat-cell";
      const title = `(${cell.hx},${cell.hy}) net ${cell.raw.toFixed(3)} kW, score ${cell.score.toFixed(3)}`;
      return `<div class="${classes}" style="background:${cell.color}" title="${escapeHtml(title)}"></div>`;
    })
    .join("");
  const note = doc.missing_quantities
    ? '<p class="note">Some clauses in this region carry no energy figures.</p>'
    : "";
  return (
    `<div class="heat-grid" style="grid-template-columns:repeat(${doc.width},1fr)">` +
    cells +
    "</div>" +
    note
  );
}
