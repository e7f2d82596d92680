import { describe, expect, it } from "vitest";

import { CanvasState, EXPORT_SIZE } from "../src/canvasState.js";
import { encodeGrayPng } from "../src/png.js";

function draw(state: CanvasState, points: [number, number][]): void {
  state.beginStroke(points[0][0], points[0][1]);
  for (const [x, y] of points.slice(1)) state.extendStroke(x, y);
  state.endStroke();
}

describe("CanvasState", () => {
  it("starts empty with export disabled", () => {
    const s = new CanvasState();
    expect(s.isEmpty).toBe(true);
    expect(() => s.exportRaster()).toThrow("empty canvas");
  });

  it("records strokes and exports a 224 raster", () => {
    const s = new CanvasState();
    draw(s, [[0, 0], [448, 448]]);
    expect(s.strokeCount).toBe(1);
    const raster = s.exportRaster();
    expect(raster.length).toBe(EXPORT_SIZE * EXPORT_SIZE);
    expect(Math.max(...raster)).toBe(1.0);
  });

  it("discards single-point strokes", () => {
    const s = new CanvasState();
    s.beginStroke(10, 10);
    s.endStroke();
    expect(s.isEmpty).toBe(true);
    expect(s.undoDepth).toBe(0);
  });

  it("undo restores the previous stroke list exactly", () => {
    const s = new CanvasState();
    draw(s, [[0, 0], [100, 100]]);
    const before = s.strokeList();
    draw(s, [[200, 0], [200, 300]]);
    expect(s.strokeCount).toBe(2);
    expect(s.undo()).toBe(true);
    expect(s.strokeList()).toEqual(before);
  });

  it("clear is undoable", () => {
    const s = new CanvasState();
    draw(s, [[0, 0], [100, 100]]);
    const before = s.strokeList();
    s.clear();
    expect(s.isEmpty).toBe(true);
    expect(s.undo()).toBe(true);
    expect(s.strokeList()).toEqual(before);
  });

  it("undo on empty history is a no-op", () => {
    const s = new CanvasState();
    expect(s.undo()).toBe(false);
    s.clear();
    expect(s.undoDepth).toBe(0);
  });

  it("exports a valid grayscale PNG payload", () => {
    const s = new CanvasState();
    draw(s, [[30, 40], [400, 410]]);
    const b64 = s.exportSketchPng();
    const bytes = Buffer.from(b64, "base64");
    expect([...bytes.subarray(0, 8)]).toEqual(
      [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
    // IHDR width/height at fixed offsets
    const width = bytes.readUInt32BE(16);
    const height = bytes.readUInt32BE(20);
    expect(width).toBe(224);
    expect(height).toBe(224);
    expect(bytes[24]).toBe(8); // bit depth
    expect(bytes[25]).toBe(0); // grayscale
  });
});

describe("encodeGrayPng", () => {
  it("round-trips pixel bytes through the stored zlib stream", async () => {
    const { inflateSync } = await import("node:zlib");
    const size = 48;
    const raster = new Float32Array(size * size);
    for (let i = 0; i < raster.length; i++) raster[i] = (i % 256) / 255;
    const png = Buffer.from(encodeGrayPng(raster, size));
    // IDAT chunk: search for the type tag
    const idat = png.indexOf("IDAT");
    const len = png.readUInt32BE(idat - 4);
    const raw = inflateSync(png.subarray(idat + 4, idat + 4 + len));
    expect(raw.length).toBe(size * (size + 1));
    for (let y = 0; y < size; y++) {
      expect(raw[y * (size + 1)]).toBe(0); // filter byte
      for (let x = 0; x < size; x++) {
        expect(raw[y * (size + 1) + 1 + x])
          .toBe(Math.round(raster[y * size + x] * 255));
      }
    }
  });

  it("rejects mismatched sizes", () => {
    expect(() => encodeGrayPng(new Float32Array(10), 224)).toThrow();
  });
});
