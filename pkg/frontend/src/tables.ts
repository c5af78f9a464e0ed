/**
 * DOM builders for server-reported numbers. The contract everywhere: cell
 * text comes from the payload as-is (no rounding, no reformatting, no
 * arithmetic), so what the expert reads is what the service computed.
 */
import type { ConfusionJson, PredictionMapJson } from "./api.js";

/** Quote-aware split of one CSV line (the report writer quotes error text). */
export function splitCsvLine(line: string): string[] {
  const out: string[] = [];
  let field = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"' && line[i + 1] === '"') {
        field += '"';
        i++;
      } else if (ch === '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      out.push(field);
      field = "";
    } else {
      field += ch;
    }
  }
  out.push(field);
  return out;
}

export function renderCvTable(doc: Document, csvText: string): HTMLTableElement {
  const table = doc.createElement("table");
  table.className = "cv-table";
  const lines = csvText.split("\n").filter((l) => l.length > 0);
  lines.forEach((line, rowIndex) => {
    const row = doc.createElement("tr");
    for (const cell of splitCsvLine(line)) {
      const el = doc.createElement(rowIndex === 0 ? "th" : "td");
      el.textContent = cell;
      row.appendChild(el);
    }
    table.appendChild(row);
  });
  return table;
}

export function renderConfusion(doc: Document, cm: ConfusionJson): HTMLTableElement {
  const table = doc.createElement("table");
  table.className = "confusion";
  const head = doc.createElement("tr");
  head.appendChild(doc.createElement("th")); // corner: predicted \ actual
  for (const name of cm.classes) {
    const th = doc.createElement("th");
    th.textContent = name;
    head.appendChild(th);
  }
  table.appendChild(head);
  cm.classes.forEach((predictedName, r) => {
    const row = doc.createElement("tr");
    const label = doc.createElement("th");
    label.textContent = predictedName;
    row.appendChild(label);
    cm.classes.forEach((_, c) => {
      const td = doc.createElement("td");
      td.textContent = String(cm.percent[r][c]);
      td.title = `${cm.counts[r][c]} tiles`;
      row.appendChild(td);
    });
    table.appendChild(row);
  });
  return table;
}

/** Tooltip for one map cell: the predicted class and its probability. */
export function mapTooltip(map: PredictionMapJson, row: number, col: number): string {
  if (row < 0 || row >= map.rows || col < 0 || col >= map.cols) {
    throw new Error(`cell (${row}, ${col}) outside ${map.rows}x${map.cols} map`);
  }
  const cell = map.cells[row * map.cols + col];
  const name = map.class_list[cell.class_index];
  return `${name}: ${String(cell.probs[cell.class_index])}`;
}
