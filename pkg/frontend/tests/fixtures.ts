/**
 * PNG files written by Pillow (the library behind the service), captured as
 * base64. Pillow applies real row filters, so decoding these exercises the
 * paths our own encoder never produces.
 */

export function b64ToBytes(b64: string): Uint8Array {
  return Uint8Array.from(Buffer.from(b64, "base64"));
}

/** 3x5 grayscale, bit depth 8 */
export const GRAY_L = {
  b64:
    "iVBORw0KGgoAAAANSUhEUgAAAAMAAAAFCAAAAAClGgl+AAAAHElEQVR4nGNg+M/O0" +
    "OBwguE/AwODYvIvRkZGRgA6uwUQIT4EOAAAAABJRU5ErkJggg==",
  width: 3,
  height: 5,
  pixels: [0, 255, 7, 128, 64, 200, 255, 0, 0, 33, 99, 250, 1, 2, 3],
};

/** 8x4 bilevel (bit depth 1), rows packed most-significant bit first */
export const GRAY_1 = {
  b64:
    "iVBORw0KGgoAAAANSUhEUgAAAAgAAAAEAQAAAACbtkNdAAAAEElEQVR4nGNYxcDPc" +
    "JJpBQAIAAIty8OmUgAAAABJRU5ErkJggg==",
  width: 8,
  height: 4,
  bits: [
    1, 0, 1, 0, 1, 0, 1, 0,
    0, 0, 0, 0, 1, 1, 1, 1,
    1, 1, 0, 0, 1, 0, 0, 1,
    0, 1, 1, 1, 0, 0, 0, 1,
  ],
};

/** 4x2 RGB, bit depth 8 */
export const RGB = {
  b64:
    "iVBORw0KGgoAAAANSUhEUgAAAAQAAAACCAIAAADwyuo0AAAAIklEQVR4nGPgEpH7z" +
    "8DA8J+BgeE/S1OAnK2G3H+Gw4wMjABTmQZ1MI9VkQAAAABJRU5ErkJggg==",
  width: 4,
  height: 2,
  pixels: [
    10, 20, 30, 255, 0, 0, 0, 255, 0, 0, 0, 255,
    140, 100, 60, 60, 140, 60, 255, 255, 255, 0, 0, 0,
  ],
};

/** 2x2 RGBA: color type 6, which the decoder must refuse */
export const RGBA = {
  b64:
    "iVBORw0KGgoAAAANSUhEUgAAAAIAAAACCAYAAABytg0kAAAAFElEQVR4nGNkZGJmY" +
    "WBgYGBigAIAAMwADui39YQAAAAASUVORK5CYII=",
};
