"""Generate stroke fixtures with server-rendered rasters for the UI tests.

Writes frontend/tests/fixtures/stroke_NN.json, each holding the input
polylines and the 224x224 server raster (base64 uint8 rows) so the
TypeScript rasterizer can be checked for parity without a server.
"""
import base64
import json
import math
from pathlib import Path

import numpy as np

from cstbir.data.rasterize import rasterize_strokes

OUT = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"
SIZE = 224


def fixture_strokes(rng):
    """A bank of shapes spanning straight, curved, multi-stroke cases."""
    def jitter(points, scale=1.5):
        return [(x + rng.normal(0, scale), y + rng.normal(0, scale))
                for x, y in points]

    shapes = []
    shapes.append([[(0, 0), (100, 100)]])                      # diagonal
    shapes.append([[(0, 50), (100, 50)], [(50, 0), (50, 100)]])  # cross
    shapes.append([[(10, 10), (90, 10), (90, 90), (10, 90), (10, 10)]])  # box
    circle = [(50 + 40 * math.cos(t), 50 + 40 * math.sin(t))
              for t in np.linspace(0, 2 * math.pi, 40)]
    shapes.append([circle])
    zig = [(i * 12, 50 + (25 if i % 2 else -25)) for i in range(9)]
    shapes.append([zig])
    tri = [(50, 5), (95, 85), (5, 85), (50, 5)]
    shapes.append([tri])
    arc = [(10 + 80 * t, 90 - 160 * t * (1 - t)) for t in np.linspace(0, 1, 30)]
    shapes.append([arc])
    spiral = [((50 + t * 4) * math.cos(t) / 2 + 60,
               (50 + t * 4) * math.sin(t) / 2 + 60)
              for t in np.linspace(0, 4 * math.pi, 80)]
    shapes.append([spiral])
    star = []
    for i in range(11):
        r = 45 if i % 2 == 0 else 18
        a = -math.pi / 2 + i * math.pi / 5
        star.append((50 + r * math.cos(a), 50 + r * math.sin(a)))
    shapes.append([star])
    shapes.append([jitter([(0, 0), (30, 70), (60, 20), (100, 90)])])

    out = []
    for base in shapes:
        out.append(base)
        out.append([jitter(s) for s in base])
    return out[:20]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(42)
    for i, strokes in enumerate(fixture_strokes(rng)):
        raster = rasterize_strokes(strokes, SIZE).pixels
        quantized = np.round(raster * 255).astype(np.uint8)
        record = {
            "canvas_size": SIZE,
            "strokes": [[[float(x), float(y)] for x, y in s] for s in strokes],
            "raster_b64": base64.b64encode(quantized.tobytes()).decode("ascii"),
        }
        path = OUT / f"stroke_{i:02d}.json"
        path.write_text(json.dumps(record))
        print(path)


if __name__ == "__main__":
    main()
