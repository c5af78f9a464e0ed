/** Map overlay view model: which cells to draw given the visibility toggles. */
import type { PredictionMapJson } from "./api.js";

export interface CellView {
  row: number;
  col: number;
  className: string;
  prob: number;
}

/** Cells whose class is not hidden; hiding every class shows the bare image. */
export function visibleCells(map: PredictionMapJson, hidden: ReadonlySet<string>): CellView[] {
  const out: CellView[] = [];
  for (let r = 0; r < map.rows; r++) {
    for (let c = 0; c < map.cols; c++) {
      const cell = map.cells[r * map.cols + c];
      const className = map.class_list[cell.class_index];
      if (hidden.has(className)) continue;
      out.push({ row: r, col: c, className, prob: cell.probs[cell.class_index] });
    }
  }
  return out;
}

/** Map grid cell under an image-space pixel, or null outside the grid. */
export function cellAt(map: PredictionMapJson, px: number, py: number): { row: number; col: number } | null {
  const col = Math.floor(px / map.size);
  const row = Math.floor(py / map.size);
  if (row < 0 || row >= map.rows || col < 0 || col >= map.cols) return null;
  return { row, col };
}

const PALETTE = [
  "#e6194b",
  "#3cb44b",
  "#4363d8",
  "#f58231",
  "#911eb4",
  "#46f0f0",
  "#f032e6",
  "#bcf60c",
];

export function classColor(classList: readonly string[], name: string): string {
  const index = classList.indexOf(name);
  if (index < 0) throw new Error(`class ${name} not in map`);
  return PALETTE[index % PALETTE.length];
}
