"""Stroke-to-raster conversion for hand-drawn sketches."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

MARGIN = 0.05
# Wu-style splat weights below this are dropped so strokes stay ~1 px wide
FAINT_CUTOFF = 0.45
# divisor lifting typical splat weights back to full intensity
CONTRAST = 0.8


class InvalidSketchError(ValueError):
    pass


@dataclass
class SketchRaster:
    """Grayscale sketch on a square canvas, intensities in [0, 1]."""

    pixels: np.ndarray  # (H, W) float32 in [0, 1]
    category: str = ""
    source: str = "stroke-rasterized"  # stroke-rasterized | synthetic | file

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float32)
        if self.pixels.ndim != 2 or self.pixels.shape[0] != self.pixels.shape[1]:
            raise InvalidSketchError(f"sketch must be square 2-D, got {self.pixels.shape}")
        if self.pixels.min() < 0 or self.pixels.max() > 1:
            raise InvalidSketchError("sketch intensities must lie in [0, 1]")

    @property
    def size(self) -> int:
        return self.pixels.shape[0]

    def is_empty(self) -> bool:
        return not bool((self.pixels > 0).any())

    def save_png(self, path: str | Path) -> None:
        img = Image.fromarray(np.round(self.pixels * 255).astype(np.uint8), mode="L")
        img.save(path)

    @classmethod
    def load_png(cls, path: str | Path, category: str = "") -> "SketchRaster":
        img = Image.open(path).convert("L")
        pix = np.asarray(img, dtype=np.float32) / 255.0
        return cls(pixels=pix, category=category, source="file")

    def resized(self, size: int) -> "SketchRaster":
        if size == self.size:
            return self
        img = Image.fromarray(np.round(self.pixels * 255).astype(np.uint8), mode="L")
        img = img.resize((size, size), Image.BILINEAR)
        return SketchRaster(np.asarray(img, dtype=np.float32) / 255.0,
                            category=self.category, source=self.source)


def _fit_strokes(strokes, canvas_size: int):
    """Scale strokes into the canvas with a margin, preserving aspect ratio."""
    pts = np.concatenate([np.asarray(s, dtype=np.float64) for s in strokes])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    usable = canvas_size * (1.0 - 2.0 * MARGIN)
    scale = usable / span if span > 0 else 0.0
    extent = (hi - lo) * scale
    offset = (canvas_size - extent) / 2.0
    fitted = []
    for s in strokes:
        a = np.asarray(s, dtype=np.float64)
        fitted.append((a - lo) * scale + offset)
    return fitted


def _splat(canvas: np.ndarray, x: float, y: float, w: float) -> None:
    if w < FAINT_CUTOFF:
        return
    n = canvas.shape[0]
    xi, yi = int(round(x)), int(round(y))
    if 0 <= yi < n and 0 <= xi < n:
        v = min(1.0, w / CONTRAST)
        if v > canvas[yi, xi]:
            canvas[yi, xi] = v


def _draw_segment(canvas: np.ndarray, p0, p1) -> None:
    """Thin anti-aliased segment: one step per major-axis pixel, the two
    straddling pixels weighted by proximity, faint spill dropped."""
    x0, y0 = p0
    x1, y1 = p1
    dx, dy = x1 - x0, y1 - y0
    steps = int(max(abs(dx), abs(dy))) + 1
    for i in range(steps + 1):
        t = i / steps if steps else 0.0
        x = x0 + t * dx
        y = y0 + t * dy
        if abs(dx) >= abs(dy):
            fy = y - np.floor(y)
            _splat(canvas, x, np.floor(y), 1.0 - fy)
            _splat(canvas, x, np.floor(y) + 1, fy)
        else:
            fx = x - np.floor(x)
            _splat(canvas, np.floor(x), y, 1.0 - fx)
            _splat(canvas, np.floor(x) + 1, y, fx)


def rasterize_strokes(strokes, canvas_size: int = 224, category: str = "") -> SketchRaster:
    """Render polyline strokes onto a square grayscale canvas.

    Strokes are scaled to fit the canvas with a 5% margin (aspect
    preserved) and drawn as thin anti-aliased lines: background 0,
    strokes toward 1.
    """
    if not strokes:
        raise InvalidSketchError("empty stroke list")
    for s in strokes:
        if len(s) < 2:
            raise InvalidSketchError("each polyline needs at least 2 points")
    if canvas_size < 32:
        raise InvalidSketchError(f"canvas_size {canvas_size} < 32")

    canvas = np.zeros((canvas_size, canvas_size), dtype=np.float32)
    for s in _fit_strokes(strokes, canvas_size):
        for a, b in zip(s[:-1], s[1:]):
            _draw_segment(canvas, a, b)
    return SketchRaster(pixels=canvas, category=category, source="stroke-rasterized")


def read_stroke_file(path: str | Path):
    """Read newline-delimited JSON stroke records (Quick, Draw! simplified).

    Each record carries a "drawing" field: a list of strokes, each stroke
    [xs, ys]. Yields (record, strokes-as-point-lists) pairs.
    """
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            strokes = [list(zip(xs, ys)) for xs, ys in rec["drawing"]]
            yield rec, strokes
