"""Batch sampling with in-batch uniqueness guarantees."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .manifest import DatasetManifest
from .rasterize import SketchRaster


class SamplingError(ValueError):
    pass


@dataclass
class Batch:
    queries: list  # CompositeQuery
    texts: list
    sketches: np.ndarray  # (N, H, W) float32 in [0, 1]
    images: np.ndarray    # (N, H, W, 3) uint8
    labels: np.ndarray    # (N,) category indices
    bboxes: np.ndarray    # (N, 4) normalized x, y, w, h

    def __len__(self) -> int:
        return len(self.queries)


def select_unique(entries, batch_size: int, rng) -> list:
    """Pick `batch_size` entries with pairwise-distinct target images and
    pairwise-distinct (text, category) pairs, without replacement."""
    n_images = len({q.target_image_id for q in entries})
    if n_images < batch_size:
        raise SamplingError(
            f"batch_size {batch_size} exceeds {n_images} distinct target images")
    order = rng.permutation(len(entries))
    picked, seen_img, seen_tc = [], set(), set()
    for i in order:
        q = entries[i]
        tc = (q.text, q.category)
        if q.target_image_id in seen_img or tc in seen_tc:
            continue
        picked.append(q)
        seen_img.add(q.target_image_id)
        seen_tc.add(tc)
        if len(picked) == batch_size:
            return picked
    raise SamplingError("could not satisfy in-batch uniqueness")


def load_image(manifest: DatasetManifest, image_id: str, cache: dict | None = None) -> np.ndarray:
    if cache is not None and image_id in cache:
        return cache[image_id]
    img = Image.open(manifest.image_path(image_id))
    if img.mode != "RGB":
        img = img.convert("RGB")
    arr = np.asarray(img, dtype=np.uint8)
    if cache is not None:
        cache[image_id] = arr
    return arr


def load_sketch(manifest: DatasetManifest, query, cache: dict | None = None) -> np.ndarray:
    if cache is not None and query.sketch in cache:
        return cache[query.sketch]
    arr = SketchRaster.load_png(manifest.sketch_path(query), category=query.category).pixels
    if cache is not None:
        cache[query.sketch] = arr
    return arr


def sample_batch(manifest: DatasetManifest, batch_size: int, rng,
                 cache: dict | None = None) -> Batch:
    """Sample a training batch where every query matches exactly one
    in-batch image (conditional sampling for true in-batch negatives)."""
    picked = select_unique(manifest.entries, batch_size, rng)
    cat_index = {c: i for i, c in enumerate(manifest.categories)}
    sketches = np.stack([load_sketch(manifest, q, cache) for q in picked])
    images = np.stack([load_image(manifest, q.target_image_id, cache) for q in picked])
    labels = np.array([cat_index[q.category] for q in picked], dtype=np.int64)
    bboxes = np.array([q.target_bbox.to_list() for q in picked], dtype=np.float64)
    return Batch(queries=picked, texts=[q.text for q in picked],
                 sketches=sketches, images=images, labels=labels, bboxes=bboxes)
