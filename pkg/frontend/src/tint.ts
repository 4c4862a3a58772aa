/**
 * Display-color computation: unlabeled points keep their sensor RGB, labeled
 * points take their palette color outright (override, not blend).
 */

import type { PaletteEntry } from "./api";

export class LengthMismatchError extends Error {
  constructor(points: number, labels: number) {
    super(`mask length ${labels} does not match frame point count ${points}`);
  }
}

export function paletteColorMap(palette: PaletteEntry[]): Map<number, [number, number, number]> {
  return new Map(palette.map((e) => [e.label, e.color]));
}

/**
 * Returns normalized [0,1] rgb triples for rendering. Throws on a
 * frame/mask length mismatch so callers never partially render.
 */
export function displayColors(
  sensorColors: Uint8Array,
  mask: Uint16Array,
  palette: PaletteEntry[],
): Float32Array {
  const count = sensorColors.length / 3;
  if (mask.length !== count) throw new LengthMismatchError(count, mask.length);
  const byLabel = paletteColorMap(palette);
  const out = new Float32Array(sensorColors.length);
  for (let i = 0; i < count; i++) {
    const tint = mask[i] !== 0 ? byLabel.get(mask[i]) : undefined;
    if (tint !== undefined) {
      out[3 * i] = tint[0] / 255;
      out[3 * i + 1] = tint[1] / 255;
      out[3 * i + 2] = tint[2] / 255;
    } else {
      out[3 * i] = sensorColors[3 * i] / 255;
      out[3 * i + 1] = sensorColors[3 * i + 1] / 255;
      out[3 * i + 2] = sensorColors[3 * i + 2] / 255;
    }
  }
  return out;
}

/** Indices whose rendered color differs from the sensor color.
 * Rendered values live in a Float32Array, so compare at f32 precision. */
export function tintedIndices(
  sensorColors: Uint8Array,
  rendered: Float32Array,
): number[] {
  const out: number[] = [];
  const count = sensorColors.length / 3;
  for (let i = 0; i < count; i++) {
    const same =
      rendered[3 * i] === Math.fround(sensorColors[3 * i] / 255) &&
      rendered[3 * i + 1] === Math.fround(sensorColors[3 * i + 1] / 255) &&
      rendered[3 * i + 2] === Math.fround(sensorColors[3 * i + 2] / 255);
    if (!same) out.push(i);
  }
  return out;
}
