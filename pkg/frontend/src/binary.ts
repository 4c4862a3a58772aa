/**
 * Parsers for the binary wire formats served by the session API.
 *
 * Frame (.pcb): "PCFB", u32 version=1, u64 point count, u64 timestamp_us,
 * then 16 bytes per point (f32 x,y,z; u8 r,g,b; 1 pad byte).
 * Mask (.lbl): "PCLB", u32 version=1, u64 count, u64 reserved, then u16 ids.
 * Everything little-endian.
 */

const HEADER_SIZE = 24;
const FRAME_RECORD_SIZE = 16;

export interface DecodedFrame {
  count: number;
  timestampUs: number;
  /** xyz triples, length 3*count (never mutated after decode) */
  positions: Float32Array;
  /** rgb triples, length 3*count */
  colors: Uint8Array;
}

function readHeader(view: DataView, magic: string, kind: string): number {
  if (view.byteLength < HEADER_SIZE) {
    throw new Error(`unexpected end of file, expected ${HEADER_SIZE} bytes`);
  }
  let tag = "";
  for (let i = 0; i < 4; i++) tag += String.fromCharCode(view.getUint8(i));
  if (tag !== magic) throw new Error(`not a ${kind} file`);
  const version = view.getUint32(4, true);
  if (version !== 1) throw new Error(`unsupported version: ${version}`);
  const count = view.getBigUint64(8, true);
  if (count > BigInt(Number.MAX_SAFE_INTEGER)) throw new Error("point count too large");
  return Number(count);
}

export function decodeFrame(buf: ArrayBuffer): DecodedFrame {
  const view = new DataView(buf);
  const count = readHeader(view, "PCFB", "frame");
  const expected = HEADER_SIZE + FRAME_RECORD_SIZE * count;
  if (buf.byteLength < expected) {
    throw new Error(`unexpected end of file, expected ${expected} bytes`);
  }
  if (buf.byteLength > expected) {
    throw new Error(`trailing data, expected ${expected} bytes`);
  }
  const timestampUs = Number(view.getBigUint64(16, true));
  const positions = new Float32Array(3 * count);
  const colors = new Uint8Array(3 * count);
  for (let i = 0; i < count; i++) {
    const base = HEADER_SIZE + i * FRAME_RECORD_SIZE;
    positions[3 * i] = view.getFloat32(base, true);
    positions[3 * i + 1] = view.getFloat32(base + 4, true);
    positions[3 * i + 2] = view.getFloat32(base + 8, true);
    colors[3 * i] = view.getUint8(base + 12);
    colors[3 * i + 1] = view.getUint8(base + 13);
    colors[3 * i + 2] = view.getUint8(base + 14);
  }
  return { count, timestampUs, positions, colors };
}

export function decodeMask(buf: ArrayBuffer): Uint16Array {
  const view = new DataView(buf);
  const count = readHeader(view, "PCLB", "mask");
  const expected = HEADER_SIZE + 2 * count;
  if (buf.byteLength < expected) {
    throw new Error(`unexpected end of file, expected ${expected} bytes`);
  }
  if (buf.byteLength > expected) {
    throw new Error(`trailing data, expected ${expected} bytes`);
  }
  const labels = new Uint16Array(count);
  for (let i = 0; i < count; i++) {
    labels[i] = view.getUint16(HEADER_SIZE + 2 * i, true);
  }
  return labels;
}
