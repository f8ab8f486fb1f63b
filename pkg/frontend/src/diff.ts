/**
 * Client-side absolute-difference heatmap of two RGBA buffers.
 */

export interface DiffResult {
  /** RGBA heatmap bytes, same dimensions as the inputs. */
  data: Uint8ClampedArray;
  /** Largest per-pixel mean absolute RGB difference, in [0, 255]. */
  maxDiff: number;
}

export function absDiffHeatmap(
  a: Uint8ClampedArray,
  b: Uint8ClampedArray,
  width: number,
  height: number,
): DiffResult {
  const n = width * height;
  if (a.length < n * 4 || b.length < n * 4) {
    throw new Error("buffers smaller than width*height RGBA");
  }
  const out = new Uint8ClampedArray(n * 4);
  let maxDiff = 0;
  for (let i = 0; i < n; i++) {
    const o = i * 4;
    const d =
      (Math.abs(a[o] - b[o]) +
        Math.abs(a[o + 1] - b[o + 1]) +
        Math.abs(a[o + 2] - b[o + 2])) /
      3;
    if (d > maxDiff) maxDiff = d;
    // red-hot ramp: difference drives red, a little into green
    out[o] = Math.min(255, d * 4);
    out[o + 1] = Math.min(255, Math.max(0, d * 2 - 64));
    out[o + 2] = 0;
    out[o + 3] = 255;
  }
  return { data: out, maxDiff };
}
