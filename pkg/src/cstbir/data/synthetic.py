"""Programmatic glyph-scene corpus for desk-scale end-to-end runs.

Scenes are 2-4 colored geometric glyphs on a textured background. The
query sketch is a jittered outline of the target glyph; the text is a
complementary attribute phrase (color / size / position / relation) that
never names the glyph category.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .manifest import BoundingBox, CompositeQuery, DatasetManifest, ImageRecord
from .rasterize import rasterize_strokes


class SyntheticError(ValueError):
    pass


def _circle_pts(n=24, r=1.0):
    t = np.linspace(0, 2 * math.pi, n + 1)
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)


def _star_pts(points=5, r_out=1.0, r_in=0.45):
    t = np.linspace(-math.pi / 2, 1.5 * math.pi, 2 * points + 1)
    r = np.where(np.arange(2 * points + 1) % 2 == 0, r_out, r_in)
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)


def _heart_pts(n=24):
    t = np.linspace(0, 2 * math.pi, n + 1)
    x = 16 * np.sin(t) ** 3
    y = -(13 * np.cos(t) - 5 * np.cos(2 * t) - 2 * np.cos(3 * t) - np.cos(4 * t))
    pts = np.stack([x, y], axis=1)
    return pts / np.abs(pts).max()


def _crescent_pts(n=12):
    t_out = np.linspace(-0.75 * math.pi, 0.75 * math.pi, n)
    outer = np.stack([np.cos(t_out), np.sin(t_out)], axis=1)
    t_in = np.linspace(0.6 * math.pi, -0.6 * math.pi, n)
    inner = np.stack([0.45 + 0.75 * np.cos(t_in), 0.75 * np.sin(t_in)], axis=1)
    return np.concatenate([outer, inner, outer[:1]], axis=0)


# glyph -> (closed outline strokes, open polyline strokes)
def _glyph_strokes(name: str):
    if name == "circle":
        return [_circle_pts()], []
    if name == "square":
        s = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1], [-1, -1]], float)
        return [s], []
    if name == "triangle":
        s = np.array([[0, -1], [1, 0.8], [-1, 0.8], [0, -1]], float)
        return [s], []
    if name == "diamond":
        s = np.array([[0, -1], [1, 0], [0, 1], [-1, 0], [0, -1]], float)
        return [s], []
    if name == "star":
        return [_star_pts()], []
    if name == "cross":
        a = 0.35
        s = np.array([[-a, -1], [a, -1], [a, -a], [1, -a], [1, a], [a, a],
                      [a, 1], [-a, 1], [-a, a], [-1, a], [-1, -a], [-a, -a],
                      [-a, -1]], float)
        return [s], []
    if name == "ring":
        return [_circle_pts(), _circle_pts(r=0.55)], []
    if name == "zigzag":
        s = np.array([[-1, 0.8], [-0.6, -0.8], [-0.2, 0.8], [0.2, -0.8],
                      [0.6, 0.8], [1, -0.8]], float)
        return [], [s]
    if name == "heart":
        return [_heart_pts()], []
    if name == "crescent":
        return [_crescent_pts()], []
    if name == "arrow":
        s = np.array([[-1, -0.35], [0.2, -0.35], [0.2, -0.9], [1, 0],
                      [0.2, 0.9], [0.2, 0.35], [-1, 0.35], [-1, -0.35]], float)
        return [s], []
    if name == "hourglass":
        s = np.array([[-1, -1], [1, -1], [-1, 1], [1, 1], [-1, -1]], float)
        return [s], []
    raise SyntheticError(f"unknown glyph {name!r}")


GLYPH_LIBRARY = ["circle", "square", "triangle", "diamond", "star", "cross",
                 "ring", "zigzag", "heart", "crescent", "arrow", "hourglass"]

PALETTE = {
    "red": (214, 39, 40), "green": (44, 160, 44), "blue": (31, 119, 180),
    "yellow": (230, 200, 30), "purple": (148, 103, 189), "orange": (255, 127, 14),
    "cyan": (23, 190, 207), "magenta": (227, 60, 180), "brown": (140, 86, 75),
    "pink": (247, 150, 185),
}


@dataclass
class SyntheticConfig:
    n_categories: int = 8
    n_train: int = 256
    n_val: int = 32
    n_gallery: int = 64
    canvas_size: int = 224
    seed: int = 0
    render_size: int = 112
    n_open_categories: int = 0
    n_open_queries: int = 0


@dataclass
class _Glyph:
    name: str
    color: str
    cx: float
    cy: float
    r: float
    size_word: str


def _draw_glyph_mask(g: _Glyph, size: int) -> np.ndarray:
    mask = Image.new("L", (size, size), 0)
    d = ImageDraw.Draw(mask)
    closed, open_ = _glyph_strokes(g.name)
    to_px = lambda pts: [(g.cx + p[0] * g.r, g.cy + p[1] * g.r) for p in pts]
    if g.name == "ring":
        d.polygon(to_px(closed[0]), fill=255)
        d.polygon(to_px(closed[1]), fill=0)
    else:
        for s in closed:
            d.polygon(to_px(s), fill=255)
    width = max(2, int(g.r * 0.3))
    for s in open_:
        d.line(to_px(s), fill=255, width=width)
    return np.asarray(mask) > 0


def _render_scene(glyphs, size: int, rng) -> tuple[np.ndarray, list]:
    """Returns RGB uint8 image and per-glyph pixel masks."""
    base = 205 + 20 * rng.random((size // 8, size // 8))
    bg = np.asarray(Image.fromarray(base.astype(np.uint8), "L").resize((size, size), Image.BILINEAR))
    img = np.stack([bg] * 3, axis=2).astype(np.uint8)
    masks = []
    for g in glyphs:
        m = _draw_glyph_mask(g, size)
        img[m] = PALETTE[g.color]
        masks.append(m)
    return img, masks


def _mask_bbox(mask: np.ndarray) -> BoundingBox:
    ys, xs = np.nonzero(mask)
    size = mask.shape[0]
    x0, x1 = xs.min(), xs.max() + 1
    y0, y1 = ys.min(), ys.max() + 1
    return BoundingBox(x0 / size, y0 / size, (x1 - x0) / size, (y1 - y0) / size)


def _position_phrase(cx: float, cy: float) -> str:
    v = "top" if cy < 0.4 else ("bottom" if cy > 0.6 else "")
    h = "left" if cx < 0.4 else ("right" if cx > 0.6 else "")
    if not v and not h:
        return "near the center"
    return "near the " + " ".join(w for w in (v, h) if w)


def _relation_phrase(target: _Glyph, other: _Glyph) -> str:
    dx, dy = target.cx - other.cx, target.cy - other.cy
    if abs(dx) >= abs(dy):
        word = "right of" if dx > 0 else "left of"
    else:
        word = "below" if dy > 0 else "above"
    return f"{word} the {other.color} shape"


def _query_text(target: _Glyph, others, rng) -> str:
    clauses = [target.color]
    extras = [target.size_word, _position_phrase(target.cx, target.cy)]
    if others:
        other = others[int(rng.integers(len(others)))]
        extras.append(_relation_phrase(target, other))
    rng.shuffle(extras)
    n_extra = 1 + int(rng.integers(len(extras)))
    clauses.extend(extras[:n_extra])
    return ", ".join(clauses)


def _jittered_sketch(name: str, canvas_size: int, rng):
    closed, open_ = _glyph_strokes(name)
    strokes = []
    for s in closed + open_:
        jit = s + rng.normal(0, 0.04, size=s.shape)
        strokes.append([(float(x), float(y)) for x, y in jit])
    return rasterize_strokes(strokes, canvas_size=canvas_size, category=name)


def _make_scene(categories, size, rng):
    n = 2 + int(rng.integers(3))
    names = list(rng.choice(categories, size=min(n, len(categories)), replace=False))
    colors = list(rng.choice(list(PALETTE), size=len(names), replace=False))
    # jittered grid placement keeps glyphs from stacking
    cells = [(0.28, 0.28), (0.72, 0.28), (0.28, 0.72), (0.72, 0.72)]
    order = rng.permutation(len(cells))
    glyphs = []
    for i, (name, color) in enumerate(zip(names, colors)):
        cx, cy = cells[order[i]]
        cx += float(rng.uniform(-0.06, 0.06))
        cy += float(rng.uniform(-0.06, 0.06))
        big = bool(rng.integers(2))
        r = float(rng.uniform(0.16, 0.20)) if big else float(rng.uniform(0.09, 0.13))
        glyphs.append(_Glyph(name, color, cx * size, cy * size, r * size,
                             "large" if big else "small"))
    return glyphs


def _generate_split(categories, n_scenes, split, out_root: Path, cfg, seed):
    rng = np.random.default_rng(seed)
    img_dir = out_root / "images" / split
    sk_dir = out_root / "sketches" / split
    img_dir.mkdir(parents=True, exist_ok=True)
    sk_dir.mkdir(parents=True, exist_ok=True)

    entries, images = [], {}
    for i in range(n_scenes):
        glyphs = _make_scene(categories, cfg.render_size, rng)
        img, masks = _render_scene(glyphs, cfg.render_size, rng)
        image_id = f"{split}_img_{i:05d}"
        rel = f"images/{split}/{image_id}.png"
        Image.fromarray(img).save(out_root / rel)
        images[image_id] = ImageRecord(rel, cfg.render_size, cfg.render_size)

        ti = int(rng.integers(len(glyphs)))
        target = glyphs[ti]
        others = glyphs[:ti] + glyphs[ti + 1:]
        sketch = _jittered_sketch(target.name, cfg.canvas_size, rng)
        qid = f"{split}_q_{i:05d}"
        sk_rel = f"sketches/{split}/{qid}.png"
        sketch.save_png(out_root / sk_rel)

        norm = lambda g: _Glyph(g.name, g.color, g.cx / cfg.render_size,
                                g.cy / cfg.render_size, g.r / cfg.render_size,
                                g.size_word)
        entries.append(CompositeQuery(
            query_id=qid,
            text=_query_text(norm(target), [norm(o) for o in others], rng),
            sketch=sk_rel,
            category=target.name,
            target_image_id=image_id,
            target_bbox=_mask_bbox(masks[ti]),
        ))

    manifest = DatasetManifest(entries=entries, images=images,
                               categories=sorted(categories), split=split,
                               root=out_root)
    manifest.save(out_root / f"manifest_{split}.jsonl")
    return manifest


def generate_synthetic(cfg: SyntheticConfig, out_dir: str | Path) -> dict:
    """Generate a full synthetic corpus under `out_dir`.

    Returns {split: DatasetManifest}. Deterministic given cfg.seed.
    """
    if cfg.n_categories < 2:
        raise SyntheticError("need at least 2 categories")
    if cfg.n_categories + cfg.n_open_categories > len(GLYPH_LIBRARY):
        raise SyntheticError(
            f"{cfg.n_categories}+{cfg.n_open_categories} categories exceed "
            f"glyph library size {len(GLYPH_LIBRARY)}")

    out_root = Path(out_dir)
    train_cats = GLYPH_LIBRARY[:cfg.n_categories]
    manifests = {}
    manifests["train"] = _generate_split(train_cats, cfg.n_train, "train",
                                         out_root, cfg, cfg.seed * 1000 + 1)
    manifests["val"] = _generate_split(train_cats, cfg.n_val, "val",
                                       out_root, cfg, cfg.seed * 1000 + 2)
    manifests["test1k"] = _generate_split(train_cats, cfg.n_gallery, "test1k",
                                          out_root, cfg, cfg.seed * 1000 + 3)
    if cfg.n_open_categories:
        open_cats = GLYPH_LIBRARY[cfg.n_categories:
                                  cfg.n_categories + cfg.n_open_categories]
        n = cfg.n_open_queries or cfg.n_gallery
        manifests["open_category"] = _generate_split(
            open_cats, n, "open_category", out_root, cfg, cfg.seed * 1000 + 4)
    return manifests
