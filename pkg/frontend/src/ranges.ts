/**
 * Hue interval editing with the same rules the server enforces: inclusive
 * integer bounds in [0, 359], sorted, pairwise disjoint. Violations are
 * caught here so a bad drag never reaches the network.
 */

export type Interval = [number, number];

export const HUE_MAX = 359;

/** Null when valid, else a human-readable reason. */
export function checkIntervals(intervals: readonly Interval[]): string | null {
  for (const [lo, hi] of intervals) {
    if (!Number.isInteger(lo) || !Number.isInteger(hi)) {
      return `bounds must be integers, got [${lo}, ${hi}]`;
    }
    if (lo > hi) {
      return `interval [${lo}, ${hi}] has its low bound above its high bound`;
    }
    if (lo < 0 || hi > HUE_MAX) {
      return `interval [${lo}, ${hi}] outside [0, ${HUE_MAX}]`;
    }
  }
  const sorted = [...intervals].sort((a, b) => a[0] - b[0]);
  for (let i = 1; i < sorted.length; i++) {
    if (sorted[i][0] <= sorted[i - 1][1]) {
      return `intervals [${sorted[i - 1]}] and [${sorted[i]}] overlap`;
    }
  }
  return null;
}

/**
 * Move one bound of one interval; returns the new sorted list or throws,
 * leaving the input untouched.
 */
export function moveBound(
  intervals: readonly Interval[],
  index: number,
  side: "lo" | "hi",
  value: number,
): Interval[] {
  if (index < 0 || index >= intervals.length) {
    throw new Error(`no interval at index ${index}`);
  }
  const next = intervals.map(([lo, hi]) => [lo, hi] as Interval);
  next[index][side === "lo" ? 0 : 1] = Math.round(value);
  const problem = checkIntervals(next);
  if (problem) throw new Error(problem);
  return next.sort((a, b) => a[0] - b[0]);
}

export function addInterval(intervals: readonly Interval[], lo: number, hi: number): Interval[] {
  const next = [...intervals.map(([a, b]) => [a, b] as Interval), [Math.round(lo), Math.round(hi)] as Interval];
  const problem = checkIntervals(next);
  if (problem) throw new Error(problem);
  return next.sort((a, b) => a[0] - b[0]);
}

export function removeInterval(intervals: readonly Interval[], index: number): Interval[] {
  if (index < 0 || index >= intervals.length) {
    throw new Error(`no interval at index ${index}`);
  }
  return intervals.filter((_, i) => i !== index).map(([a, b]) => [a, b] as Interval);
}
