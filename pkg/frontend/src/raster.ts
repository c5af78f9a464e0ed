/**
 * Client-side mask raster and the stroke model behind the painting canvas.
 *
 * Strokes are kept as data, never as canvas pixels: the committed mask is
 * always the deterministic replay of the stroke list over the base raster,
 * which is what makes undo exact and the server round-trip bit-comparable.
 */
import { decodePng, encodeGray } from "./png.js";

export type BrushMode = "paint" | "erase";

export interface Point {
  x: number;
  y: number;
}

export type Stroke =
  | { kind: "brush"; points: Point[]; radius: number; mode: BrushMode }
  | { kind: "polygon"; points: Point[]; mode: BrushMode };

export class MaskRaster {
  readonly width: number;
  readonly height: number;
  /** 0/1 per pixel, row-major */
  readonly data: Uint8Array;

  constructor(width: number, height: number, data?: Uint8Array) {
    if (width < 1 || height < 1) throw new Error(`mask must be at least 1x1, got ${width}x${height}`);
    if (data && data.length !== width * height) {
      throw new Error(`expected ${width * height} pixels, got ${data.length}`);
    }
    this.width = width;
    this.height = height;
    this.data = data ?? new Uint8Array(width * height);
  }

  clone(): MaskRaster {
    return new MaskRaster(this.width, this.height, this.data.slice());
  }

  equals(other: MaskRaster): boolean {
    if (other.width !== this.width || other.height !== this.height) return false;
    return this.data.every((v, i) => v === other.data[i]);
  }

  get(x: number, y: number): number {
    return this.data[y * this.width + x];
  }

  count(): number {
    return this.data.reduce((n, v) => n + v, 0);
  }

  private set(x: number, y: number, value: number): void {
    if (x >= 0 && x < this.width && y >= 0 && y < this.height) {
      this.data[y * this.width + x] = value;
    }
  }

  private stamp(cx: number, cy: number, radius: number, value: number): void {
    const r = Math.max(0, Math.round(radius));
    const r2 = r * r;
    for (let dy = -r; dy <= r; dy++) {
      for (let dx = -r; dx <= r; dx++) {
        if (dx * dx + dy * dy <= r2) {
          this.set(Math.round(cx) + dx, Math.round(cy) + dy, value);
        }
      }
    }
  }

  applyStroke(stroke: Stroke): void {
    const value = stroke.mode === "paint" ? 1 : 0;
    if (stroke.kind === "brush") {
      if (stroke.points.length === 0) return;
      let prev = stroke.points[0];
      this.stamp(prev.x, prev.y, stroke.radius, value);
      for (const point of stroke.points.slice(1)) {
        // stamp at every unit step so fast drags leave no gaps
        const steps = Math.max(1, Math.ceil(Math.max(Math.abs(point.x - prev.x), Math.abs(point.y - prev.y))));
        for (let s = 1; s <= steps; s++) {
          const t = s / steps;
          this.stamp(prev.x + t * (point.x - prev.x), prev.y + t * (point.y - prev.y), stroke.radius, value);
        }
        prev = point;
      }
    } else {
      this.fillPolygon(stroke.points, value);
    }
  }

  /** Even-odd scanline fill; a pixel is inside when its center is. */
  private fillPolygon(points: Point[], value: number): void {
    if (points.length < 3) return;
    const ys = points.map((p) => p.y);
    const y0 = Math.max(0, Math.floor(Math.min(...ys)));
    const y1 = Math.min(this.height - 1, Math.ceil(Math.max(...ys)));
    for (let y = y0; y <= y1; y++) {
      const scan = y + 0.5;
      const xs: number[] = [];
      for (let i = 0; i < points.length; i++) {
        const a = points[i];
        const b = points[(i + 1) % points.length];
        if (a.y <= scan !== b.y <= scan) {
          xs.push(a.x + ((scan - a.y) * (b.x - a.x)) / (b.y - a.y));
        }
      }
      xs.sort((p, q) => p - q);
      for (let i = 0; i + 1 < xs.length; i += 2) {
        const from = Math.ceil(xs[i] - 0.5);
        const to = Math.ceil(xs[i + 1] - 0.5) - 1;
        for (let x = from; x <= to; x++) {
          this.set(x, y, value);
        }
      }
    }
  }

  toPngBytes(): Uint8Array {
    const levels = new Uint8Array(this.data.length);
    for (let i = 0; i < this.data.length; i++) {
      levels[i] = this.data[i] ? 255 : 0;
    }
    return encodeGray(levels, this.width, this.height);
  }

  static fromPngBytes(bytes: Uint8Array): MaskRaster {
    const png = decodePng(bytes);
    if (png.channels !== 1) throw new Error("mask PNG must be single-channel");
    const bits = new Uint8Array(png.data.length);
    for (let i = 0; i < png.data.length; i++) {
      bits[i] = png.data[i] > 0 ? 1 : 0;
    }
    return new MaskRaster(png.width, png.height, bits);
  }
}

/** The stroke list applied over a base raster; the undo primitive. */
export function replay(base: MaskRaster, strokes: readonly Stroke[]): MaskRaster {
  const raster = base.clone();
  for (const stroke of strokes) {
    raster.applyStroke(stroke);
  }
  return raster;
}
