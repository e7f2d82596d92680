/**
 * Stroke-to-raster conversion, mirroring the server's rendering pipeline
 * constant for constant so client previews and server-side rasters agree.
 */

export const MARGIN = 0.05;
/** Splat weights below this are dropped so strokes stay ~1 px wide. */
export const FAINT_CUTOFF = 0.45;
/** Divisor lifting typical splat weights back to full intensity. */
export const CONTRAST = 0.8;

export type Point = [number, number];
export type Stroke = Point[];

export class InvalidSketchError extends Error {}

/** Round-half-to-even, matching the server's rounding of pixel centers. */
function roundHalfEven(x: number): number {
  const floor = Math.floor(x);
  const frac = x - floor;
  if (frac > 0.5) return floor + 1;
  if (frac < 0.5) return floor;
  return floor % 2 === 0 ? floor : floor + 1;
}

/** Scale strokes into the canvas with a margin, preserving aspect ratio. */
export function fitStrokes(strokes: Stroke[], canvasSize: number): Stroke[] {
  let loX = Infinity, loY = Infinity, hiX = -Infinity, hiY = -Infinity;
  for (const s of strokes) {
    for (const [x, y] of s) {
      loX = Math.min(loX, x);
      loY = Math.min(loY, y);
      hiX = Math.max(hiX, x);
      hiY = Math.max(hiY, y);
    }
  }
  const span = Math.max(hiX - loX, hiY - loY);
  const usable = canvasSize * (1.0 - 2.0 * MARGIN);
  const scale = span > 0 ? usable / span : 0.0;
  const offX = (canvasSize - (hiX - loX) * scale) / 2.0;
  const offY = (canvasSize - (hiY - loY) * scale) / 2.0;
  return strokes.map((s) =>
    s.map(([x, y]): Point => [(x - loX) * scale + offX, (y - loY) * scale + offY])
  );
}

function splat(canvas: Float32Array, n: number, x: number, y: number, w: number): void {
  if (w < FAINT_CUTOFF) return;
  const xi = roundHalfEven(x);
  const yi = roundHalfEven(y);
  if (yi >= 0 && yi < n && xi >= 0 && xi < n) {
    const v = Math.min(1.0, w / CONTRAST);
    if (v > canvas[yi * n + xi]) canvas[yi * n + xi] = v;
  }
}

/**
 * Thin anti-aliased segment: one step per major-axis pixel, the two
 * straddling pixels weighted by proximity, faint spill dropped.
 */
function drawSegment(canvas: Float32Array, n: number, p0: Point, p1: Point): void {
  const [x0, y0] = p0;
  const [x1, y1] = p1;
  const dx = x1 - x0;
  const dy = y1 - y0;
  const steps = Math.trunc(Math.max(Math.abs(dx), Math.abs(dy))) + 1;
  for (let i = 0; i <= steps; i++) {
    const t = steps ? i / steps : 0.0;
    const x = x0 + t * dx;
    const y = y0 + t * dy;
    if (Math.abs(dx) >= Math.abs(dy)) {
      const fy = y - Math.floor(y);
      splat(canvas, n, x, Math.floor(y), 1.0 - fy);
      splat(canvas, n, x, Math.floor(y) + 1, fy);
    } else {
      const fx = x - Math.floor(x);
      splat(canvas, n, Math.floor(x), y, 1.0 - fx);
      splat(canvas, n, Math.floor(x) + 1, y, fx);
    }
  }
}

/**
 * Render polyline strokes onto a square grayscale canvas.
 *
 * Strokes are scaled to fit the canvas with a 5% margin (aspect
 * preserved) and drawn as thin anti-aliased lines: background 0,
 * strokes toward 1. Returns a row-major (size*size) intensity array.
 */
export function rasterizeStrokes(strokes: Stroke[], canvasSize = 224): Float32Array {
  if (strokes.length === 0) throw new InvalidSketchError("empty stroke list");
  for (const s of strokes) {
    if (s.length < 2) {
      throw new InvalidSketchError("each polyline needs at least 2 points");
    }
  }
  if (canvasSize < 32) {
    throw new InvalidSketchError(`canvas size ${canvasSize} < 32`);
  }
  const canvas = new Float32Array(canvasSize * canvasSize);
  for (const s of fitStrokes(strokes, canvasSize)) {
    for (let i = 0; i + 1 < s.length; i++) {
      drawSegment(canvas, canvasSize, s[i], s[i + 1]);
    }
  }
  return canvas;
}

/**
 * Count of 8-connected components among nonzero pixels. Diagonal
 * adjacency is required: a 1 px anti-aliased stroke advances one pixel
 * per major-axis step, so consecutive pixels may touch corner to corner.
 */
export function connectedComponents(raster: Float32Array, n: number): number {
  const seen = new Uint8Array(n * n);
  let count = 0;
  const stack: number[] = [];
  for (let start = 0; start < n * n; start++) {
    if (raster[start] <= 0 || seen[start]) continue;
    count++;
    stack.push(start);
    seen[start] = 1;
    while (stack.length) {
      const p = stack.pop()!;
      const y = Math.floor(p / n);
      const x = p % n;
      for (let dy = -1; dy <= 1; dy++) {
        for (let dx = -1; dx <= 1; dx++) {
          if (dx === 0 && dy === 0) continue;
          const nx = x + dx;
          const ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= n || ny >= n) continue;
          const q = ny * n + nx;
          if (raster[q] > 0 && !seen[q]) {
            seen[q] = 1;
            stack.push(q);
          }
        }
      }
    }
  }
  return count;
}
