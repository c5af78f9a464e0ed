/**
 * In-memory annotation session: what the user is editing and how it is shown.
 * Overlay toggles are display state only; nothing here talks to the network.
 */
import { MaskRaster, replay, type BrushMode, type Stroke } from "./raster.js";

export interface BrushState {
  radius: number;
  mode: BrushMode;
}

export interface OverlayToggles {
  mask: boolean;
  tiles: boolean;
  map: boolean;
  alpha: number;
  /** class names hidden in the map overlay */
  hidden: Set<string>;
}

export class UiSession {
  activeImage: string | null = null;
  activeClass: string | null = null;
  brush: BrushState = { radius: 4, mode: "paint" };
  readonly toggles: OverlayToggles = { mask: true, tiles: false, map: false, alpha: 0.5, hidden: new Set() };

  private base: MaskRaster | null = null;
  private strokes: Stroke[] = [];

  /** Start editing from the server-side mask state (or a blank raster). */
  loadMask(base: MaskRaster): void {
    this.base = base;
    this.strokes = [];
  }

  get loaded(): boolean {
    return this.base !== null;
  }

  get dirty(): boolean {
    return this.strokes.length > 0;
  }

  private require(): MaskRaster {
    if (!this.base) throw new Error("no mask loaded");
    return this.base;
  }

  addStroke(stroke: Stroke): void {
    this.require();
    this.strokes.push(stroke);
  }

  undo(): boolean {
    return this.strokes.pop() !== undefined;
  }

  /** Current raster = base + stroke list; undoing everything returns base. */
  current(): MaskRaster {
    return replay(this.require(), this.strokes);
  }

  /** PNG payload for PUT. */
  commitPayload(): Uint8Array {
    return this.current().toPngBytes();
  }

  /** After a successful PUT the committed raster becomes the new base. */
  markCommitted(): void {
    this.base = this.current();
    this.strokes = [];
  }

  toggleClassVisibility(name: string): void {
    if (this.toggles.hidden.has(name)) {
      this.toggles.hidden.delete(name);
    } else {
      this.toggles.hidden.add(name);
    }
  }
}
