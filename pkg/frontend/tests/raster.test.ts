import { describe, expect, it } from "vitest";
import { encodeGray, encodeRgb } from "../src/png.js";
import { MaskRaster, Stroke, replay } from "../src/raster.js";

function paintedSet(raster: MaskRaster): Set<string> {
  const out = new Set<string>();
  for (let y = 0; y < raster.height; y++) {
    for (let x = 0; x < raster.width; x++) {
      if (raster.get(x, y)) out.add(`${x},${y}`);
    }
  }
  return out;
}

describe("brush strokes", () => {
  it("radius 0 paints a single pixel", () => {
    const r = new MaskRaster(8, 8);
    r.applyStroke({ kind: "brush", points: [{ x: 3, y: 4 }], radius: 0, mode: "paint" });
    expect(paintedSet(r)).toEqual(new Set(["3,4"]));
  });

  it("radius 1 paints a plus shape", () => {
    const r = new MaskRaster(8, 8);
    r.applyStroke({ kind: "brush", points: [{ x: 3, y: 3 }], radius: 1, mode: "paint" });
    expect(paintedSet(r)).toEqual(new Set(["3,3", "2,3", "4,3", "3,2", "3,4"]));
  });

  it("fills every pixel along a drag with no gaps", () => {
    const r = new MaskRaster(10, 5);
    r.applyStroke({
      kind: "brush",
      points: [
        { x: 1, y: 2 },
        { x: 7, y: 2 },
      ],
      radius: 0,
      mode: "paint",
    });
    expect(paintedSet(r)).toEqual(new Set(["1,2", "2,2", "3,2", "4,2", "5,2", "6,2", "7,2"]));
  });

  it("clips stamps at the raster edge", () => {
    const r = new MaskRaster(4, 4);
    r.applyStroke({ kind: "brush", points: [{ x: 0, y: 0 }], radius: 2, mode: "paint" });
    // quarter disc only; nothing thrown, nothing wrapped
    expect(r.get(0, 0)).toBe(1);
    expect(r.get(2, 0)).toBe(1);
    expect(r.get(3, 3)).toBe(0);
  });

  it("erase mode clears painted pixels", () => {
    const r = new MaskRaster(8, 8);
    r.applyStroke({ kind: "brush", points: [{ x: 3, y: 3 }], radius: 2, mode: "paint" });
    r.applyStroke({ kind: "brush", points: [{ x: 3, y: 3 }], radius: 0, mode: "erase" });
    expect(r.get(3, 3)).toBe(0);
    expect(r.get(2, 3)).toBe(1);
  });
});

describe("polygon fill", () => {
  it("fills an axis-aligned rectangle by pixel centers", () => {
    const r = new MaskRaster(8, 6);
    r.applyStroke({
      kind: "polygon",
      points: [
        { x: 1, y: 1 },
        { x: 5, y: 1 },
        { x: 5, y: 3 },
        { x: 1, y: 3 },
      ],
      mode: "paint",
    });
    const expected = new Set<string>();
    for (let y = 1; y <= 2; y++) for (let x = 1; x <= 4; x++) expected.add(`${x},${y}`);
    expect(paintedSet(r)).toEqual(expected);
  });

  it("fills a right triangle with the hand-computed pixel rows", () => {
    const r = new MaskRaster(8, 8);
    r.applyStroke({
      kind: "polygon",
      points: [
        { x: 0, y: 0 },
        { x: 6, y: 0 },
        { x: 0, y: 6 },
      ],
      mode: "paint",
    });
    // hypotenuse x = 6 - (y + 0.5); row y keeps centers strictly inside
    const expected = new Set<string>();
    const widths = [5, 4, 3, 2, 1];
    widths.forEach((w, y) => {
      for (let x = 0; x < w; x++) expected.add(`${x},${y}`);
    });
    expect(paintedSet(r)).toEqual(expected);
    expect(r.count()).toBe(15);
  });

  it("clips polygons that extend outside the raster", () => {
    const r = new MaskRaster(4, 4);
    r.applyStroke({
      kind: "polygon",
      points: [
        { x: -3, y: -3 },
        { x: 9, y: -3 },
        { x: 9, y: 2 },
        { x: -3, y: 2 },
      ],
      mode: "paint",
    });
    expect(r.count()).toBe(8); // rows 0 and 1 in full
  });

  it("ignores degenerate polygons", () => {
    const r = new MaskRaster(4, 4);
    r.applyStroke({ kind: "polygon", points: [{ x: 1, y: 1 }, { x: 2, y: 2 }], mode: "paint" });
    expect(r.count()).toBe(0);
  });
});

describe("replay and cloning", () => {
  const strokes: Stroke[] = [
    { kind: "brush", points: [{ x: 2, y: 2 }, { x: 8, y: 4 }], radius: 2, mode: "paint" },
    { kind: "polygon", points: [{ x: 5, y: 5 }, { x: 11, y: 5 }, { x: 8, y: 11 }], mode: "paint" },
    { kind: "brush", points: [{ x: 6, y: 6 }], radius: 1, mode: "erase" },
  ];

  it("equals applying the strokes one by one", () => {
    const base = new MaskRaster(12, 12);
    const sequential = base.clone();
    for (const s of strokes) sequential.applyStroke(s);
    expect(replay(base, strokes).equals(sequential)).toBe(true);
  });

  it("never mutates the base raster", () => {
    const base = new MaskRaster(12, 12);
    const before = base.clone();
    replay(base, strokes);
    expect(base.equals(before)).toBe(true);
  });
});

describe("PNG conversion", () => {
  it("roundtrips through its own bytes", () => {
    const r = new MaskRaster(9, 7);
    r.applyStroke({ kind: "brush", points: [{ x: 4, y: 3 }], radius: 2, mode: "paint" });
    const back = MaskRaster.fromPngBytes(r.toPngBytes());
    expect(back.equals(r)).toBe(true);
  });

  it("treats any nonzero level as painted", () => {
    const png = encodeGray(Uint8Array.from([0, 1, 254, 255]), 2, 2);
    expect(Array.from(MaskRaster.fromPngBytes(png).data)).toEqual([0, 1, 1, 1]);
  });

  it("rejects color PNGs", () => {
    const png = encodeRgb(new Uint8Array(2 * 2 * 3), 2, 2);
    expect(() => MaskRaster.fromPngBytes(png)).toThrow(/single-channel/);
  });

  it("rejects dimension/data mismatches", () => {
    expect(() => new MaskRaster(2, 2, new Uint8Array(3))).toThrow(/expected 4 pixels/);
    expect(() => new MaskRaster(0, 5)).toThrow(/at least 1x1/);
  });
});
