/**
 * Drawing surface state: pointer strokes on a 448x448 logical canvas,
 * exported at 224 for search requests. Pure state, no DOM.
 */
import { rasterizeStrokes, Stroke } from "./rasterize.js";
import { encodeGrayPng, toBase64 } from "./png.js";

export const LOGICAL_SIZE = 448;
export const EXPORT_SIZE = 224;

export interface TimedStroke {
  points: Stroke;
  startedAt: number;
}

type Snapshot = TimedStroke[];

export class CanvasState {
  private strokes: TimedStroke[] = [];
  private undoStack: Snapshot[] = [];
  private active: TimedStroke | null = null;

  get strokeCount(): number {
    return this.strokes.length;
  }

  get isEmpty(): boolean {
    return this.strokes.length === 0;
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  strokeList(): Stroke[] {
    return this.strokes.map((s) => s.points.map((p) => [...p] as [number, number]));
  }

  beginStroke(x: number, y: number, now: number = Date.now()): void {
    this.active = { points: [[x, y]], startedAt: now };
  }

  extendStroke(x: number, y: number): void {
    if (!this.active) return;
    this.active.points.push([x, y]);
  }

  /** Commit the in-progress stroke; single-point strokes are discarded. */
  endStroke(): void {
    if (!this.active) return;
    if (this.active.points.length >= 2) {
      this.pushUndo();
      this.strokes.push(this.active);
    }
    this.active = null;
  }

  clear(): void {
    if (this.strokes.length === 0) return;
    this.pushUndo();
    this.strokes = [];
  }

  /** Restore the stroke list exactly as before the last mutation. */
  undo(): boolean {
    const prev = this.undoStack.pop();
    if (prev === undefined) return false;
    this.strokes = prev;
    return true;
  }

  /** Raster of the current strokes at the export resolution. */
  exportRaster(size: number = EXPORT_SIZE): Float32Array {
    if (this.isEmpty) throw new Error("empty canvas");
    return rasterizeStrokes(this.strokeList(), size);
  }

  /** Base64 grayscale PNG at 224x224, the /api/search sketch payload. */
  exportSketchPng(): string {
    return toBase64(encodeGrayPng(this.exportRaster(), EXPORT_SIZE));
  }

  private pushUndo(): void {
    this.undoStack.push(this.strokes.map((s) => ({
      points: s.points.map((p) => [...p] as [number, number]),
      startedAt: s.startedAt,
    })));
  }
}
