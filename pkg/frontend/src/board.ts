/**
 * Tile review board: harvested or suggested tiles waiting for a verdict.
 *
 * Verdicts never rewrite history: the patched manifest keeps every entry's
 * provenance, approved entries are unchanged apart from the review flag,
 * relabels swap the label, and rejected tiles are dropped so they cannot
 * reach training.
 */
import type { NeighborRow } from "./api.js";

export type Verdict = "pending" | "approved" | "rejected";

export interface BoardEntry {
  image_id: string;
  x: number;
  y: number;
  size: number;
  label: string | null;
  provenance: string;
  review: Verdict;
  relabel?: string;
}

export const PAGE_SIZE = 200;

export function entryKey(e: { image_id: string; x: number; y: number; size: number }): string {
  return `${e.image_id}:${e.x}:${e.y}:${e.size}`;
}

export class ReviewBoard {
  readonly entries: BoardEntry[];

  constructor(entries: BoardEntry[]) {
    this.entries = entries;
  }

  static fromManifestJsonl(text: string): ReviewBoard {
    const entries: BoardEntry[] = [];
    for (const line of text.split("\n")) {
      if (!line.trim()) continue;
      const rec = JSON.parse(line);
      entries.push({
        image_id: rec.image_id,
        x: rec.x,
        y: rec.y,
        size: rec.size,
        label: rec.label ?? null,
        provenance: rec.provenance ?? "direct",
        review: "pending",
      });
    }
    return new ReviewBoard(entries);
  }

  /** Suggested tiles arrive already ordered by ascending distance; keep it. */
  static fromSuggestions(rows: NeighborRow[], label: string | null): ReviewBoard {
    return new ReviewBoard(
      rows.map((r) => ({
        image_id: r.image_id,
        x: r.x,
        y: r.y,
        size: r.size,
        label,
        provenance: "suggested",
        review: "pending" as Verdict,
      })),
    );
  }

  pageCount(perPage = PAGE_SIZE): number {
    return Math.max(1, Math.ceil(this.entries.length / perPage));
  }

  page(index: number, perPage = PAGE_SIZE): BoardEntry[] {
    return this.entries.slice(index * perPage, (index + 1) * perPage);
  }

  private find(key: string): BoardEntry {
    const entry = this.entries.find((e) => entryKey(e) === key);
    if (!entry) throw new Error(`no tile ${key} on the board`);
    return entry;
  }

  approve(key: string): void {
    const e = this.find(key);
    e.review = "approved";
    delete e.relabel;
  }

  reject(key: string): void {
    this.find(key).review = "rejected";
  }

  relabel(key: string, label: string): void {
    const e = this.find(key);
    e.review = "approved";
    e.relabel = label;
  }

  approveAll(): void {
    for (const e of this.entries) {
      if (e.review === "pending") e.review = "approved";
    }
  }

  /** Manifest JSONL after review: rejected tiles are gone, the rest keep
   * their provenance and carry the review flag. */
  toManifestJsonl(): string {
    const lines: string[] = [];
    for (const e of this.entries) {
      if (e.review === "rejected") continue;
      lines.push(
        JSON.stringify({
          image_id: e.image_id,
          x: e.x,
          y: e.y,
          size: e.size,
          label: e.relabel ?? e.label,
          provenance: e.provenance,
          review: e.review,
        }),
      );
    }
    return lines.map((l) => l + "\n").join("");
  }
}
