/**
 * Minimal PNG codec for the payloads this app exchanges with the service:
 * single-channel masks and RGB images.
 *
 * Decodes non-interlaced grayscale (bit depth 1 or 8) and 8-bit RGB, which
 * covers everything the server emits. Encodes with no row filtering and
 * stored-block zlib, so a given raster always produces the same bytes.
 */
import { inflate } from "pako";

export interface DecodedPng {
  width: number;
  height: number;
  /** 1 = grayscale, 3 = RGB */
  channels: 1 | 3;
  /** row-major samples, 8-bit; depth-1 input is expanded to 0/255 */
  data: Uint8Array;
}

const SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];

const CRC_TABLE = new Uint32Array(256);
for (let n = 0; n < 256; n++) {
  let c = n;
  for (let k = 0; k < 8; k++) {
    c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
  }
  CRC_TABLE[n] = c >>> 0;
}

function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    c = CRC_TABLE[(c ^ bytes[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function adler32(bytes: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (let i = 0; i < bytes.length; i++) {
    a = (a + bytes[i]) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function u32(value: number): Uint8Array {
  return new Uint8Array([(value >>> 24) & 0xff, (value >>> 16) & 0xff, (value >>> 8) & 0xff, value & 0xff]);
}

function concat(parts: Uint8Array[]): Uint8Array {
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let at = 0;
  for (const p of parts) {
    out.set(p, at);
    at += p.length;
  }
  return out;
}

function chunk(type: string, body: Uint8Array): Uint8Array {
  const typed = new Uint8Array(4 + body.length);
  for (let i = 0; i < 4; i++) typed[i] = type.charCodeAt(i);
  typed.set(body, 4);
  return concat([u32(body.length), typed, u32(crc32(typed))]);
}

/** zlib stream with stored (uncompressed) deflate blocks: deterministic. */
function zlibStored(raw: Uint8Array): Uint8Array {
  const parts: Uint8Array[] = [new Uint8Array([0x78, 0x01])];
  const max = 0xffff;
  for (let at = 0; at < raw.length || at === 0; at += max) {
    const piece = raw.subarray(at, Math.min(at + max, raw.length));
    const last = at + max >= raw.length ? 1 : 0;
    const len = piece.length;
    parts.push(new Uint8Array([last, len & 0xff, len >>> 8, ~len & 0xff, (~len >>> 8) & 0xff]));
    parts.push(piece);
    if (raw.length === 0) break;
  }
  parts.push(u32(adler32(raw)));
  return concat(parts);
}

function encode(data: Uint8Array, width: number, height: number, channels: 1 | 3): Uint8Array {
  if (data.length !== width * height * channels) {
    throw new Error(`expected ${width * height * channels} samples, got ${data.length}`);
  }
  const stride = width * channels;
  const raw = new Uint8Array((stride + 1) * height);
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0; // filter type None
    raw.set(data.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }
  const ihdr = new Uint8Array(13);
  ihdr.set(u32(width), 0);
  ihdr.set(u32(height), 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = channels === 1 ? 0 : 2; // color type
  // compression, filter, interlace all 0
  return concat([
    new Uint8Array(SIGNATURE),
    chunk("IHDR", ihdr),
    chunk("IDAT", zlibStored(raw)),
    chunk("IEND", new Uint8Array(0)),
  ]);
}

export function encodeGray(data: Uint8Array, width: number, height: number): Uint8Array {
  return encode(data, width, height, 1);
}

export function encodeRgb(data: Uint8Array, width: number, height: number): Uint8Array {
  return encode(data, width, height, 3);
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export function decodePng(bytes: Uint8Array): DecodedPng {
  for (let i = 0; i < 8; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("not a PNG stream");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let at = 8;
  let width = 0;
  let height = 0;
  let bitDepth = 0;
  let colorType = 0;
  const idat: Uint8Array[] = [];
  while (at < bytes.length) {
    const length = view.getUint32(at);
    const type = String.fromCharCode(bytes[at + 4], bytes[at + 5], bytes[at + 6], bytes[at + 7]);
    const body = bytes.subarray(at + 8, at + 8 + length);
    if (type === "IHDR") {
      width = view.getUint32(at + 8);
      height = view.getUint32(at + 12);
      bitDepth = bytes[at + 16];
      colorType = bytes[at + 17];
      if (bytes[at + 20] !== 0) throw new Error("interlaced PNG is not supported");
    } else if (type === "IDAT") {
      idat.push(body);
    } else if (type === "IEND") {
      break;
    }
    at += 12 + length; // length + type + crc
  }
  const gray = colorType === 0;
  if (!gray && colorType !== 2) throw new Error(`unsupported color type ${colorType}`);
  if (gray && bitDepth !== 1 && bitDepth !== 8) throw new Error(`unsupported bit depth ${bitDepth}`);
  if (!gray && bitDepth !== 8) throw new Error(`unsupported bit depth ${bitDepth} for RGB`);

  const channels: 1 | 3 = gray ? 1 : 3;
  const raw = inflate(concat(idat));
  const rowBytes = Math.ceil((width * channels * bitDepth) / 8);
  const fbp = Math.max(1, (channels * bitDepth) / 8); // filter byte distance
  const lines = new Uint8Array(rowBytes * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (rowBytes + 1)];
    const row = raw.subarray(y * (rowBytes + 1) + 1, (y + 1) * (rowBytes + 1));
    const out = lines.subarray(y * rowBytes, (y + 1) * rowBytes);
    const prev = y > 0 ? lines.subarray((y - 1) * rowBytes, y * rowBytes) : null;
    for (let x = 0; x < rowBytes; x++) {
      const left = x >= fbp ? out[x - fbp] : 0;
      const up = prev ? prev[x] : 0;
      const upLeft = prev && x >= fbp ? prev[x - fbp] : 0;
      let v = row[x];
      switch (filter) {
        case 0:
          break;
        case 1:
          v += left;
          break;
        case 2:
          v += up;
          break;
        case 3:
          v += (left + up) >> 1;
          break;
        case 4:
          v += paeth(left, up, upLeft);
          break;
        default:
          throw new Error(`unknown filter type ${filter}`);
      }
      out[x] = v & 0xff;
    }
  }

  if (bitDepth === 8) {
    return { width, height, channels, data: lines };
  }
  // depth 1: unpack most-significant bit first, expand to 0/255
  const data = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const byte = lines[y * rowBytes + (x >> 3)];
      data[y * width + x] = (byte >> (7 - (x & 7))) & 1 ? 255 : 0;
    }
  }
  return { width, height, channels: 1, data };
}
