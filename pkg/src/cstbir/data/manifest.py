"""Dataset manifests: composite queries, splits, statistics, JSONL IO."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPLITS = ("train", "val", "test1k", "test5k", "open_category")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, top-left corner + extents, normalized to [0, 1]."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (0 <= self.x and 0 <= self.y and self.w > 0 and self.h > 0
                and self.x + self.w <= 1 + 1e-9 and self.y + self.h <= 1 + 1e-9):
            raise ManifestError(f"invalid box {(self.x, self.y, self.w, self.h)}")

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_list(self):
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True)
class CompositeQuery:
    """One sketch+text query against a known target image."""

    query_id: str
    text: str
    sketch: str  # sketch id or relative path
    category: str
    target_image_id: str
    target_bbox: BoundingBox

    def __post_init__(self):
        if not self.text:
            raise ManifestError(f"query {self.query_id}: empty text")


@dataclass
class ImageRecord:
    path: str
    width: int
    height: int


@dataclass
class DatasetManifest:
    entries: list = field(default_factory=list)
    images: dict = field(default_factory=dict)  # image_id -> ImageRecord
    categories: list = field(default_factory=list)
    split: str = "train"
    root: Path | None = None  # directory paths in records are relative to

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ManifestError(f"unknown split {self.split!r}")
        if len(set(self.categories)) != len(self.categories):
            raise ManifestError("duplicate categories")

    def validate(self) -> None:
        cats = set(self.categories)
        for q in self.entries:
            if q.target_image_id not in self.images:
                raise ManifestError(f"query {q.query_id}: unresolved image {q.target_image_id}")
            if q.category not in cats:
                raise ManifestError(f"query {q.query_id}: unknown category {q.category}")

    def image_path(self, image_id: str) -> Path:
        p = Path(self.images[image_id].path)
        return p if p.is_absolute() or self.root is None else self.root / p

    def sketch_path(self, query: CompositeQuery) -> Path:
        p = Path(query.sketch)
        return p if p.is_absolute() or self.root is None else self.root / p

    def save(self, path: str | Path) -> None:
        """Write one JSON record per line; first line is the header."""
        path = Path(path)
        with open(path, "w", encoding="utf-8") as fh:
            header = {
                "categories": list(self.categories),
                "version": 1,
                "split": self.split,
                "images": {k: [v.path, v.width, v.height] for k, v in sorted(self.images.items())},
            }
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for q in self.entries:
                rec = {
                    "query_id": q.query_id,
                    "text": q.text,
                    "sketch": q.sketch,
                    "category": q.category,
                    "image_id": q.target_image_id,
                    "bbox": q.target_bbox.to_list(),
                    "split": self.split,
                }
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            m = cls(
                categories=header["categories"],
                split=header.get("split", "train"),
                images={k: ImageRecord(*v) for k, v in header.get("images", {}).items()},
                root=path.parent,
            )
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                m.entries.append(CompositeQuery(
                    query_id=rec["query_id"],
                    text=rec["text"],
                    sketch=rec["sketch"],
                    category=rec["category"],
                    target_image_id=rec["image_id"],
                    target_bbox=BoundingBox(*rec["bbox"]),
                ))
        m.validate()
        return m


@dataclass
class DatasetStats:
    avg_sentence_words: float
    avg_sentence_tokens: float
    n_images: int
    n_sketches: int
    n_categories: int
    n_queries: int
    avg_area_covered_pct: float


@dataclass
class BuildReport:
    n_kept: int
    n_dropped: int
    dropped_categories: list


def build_manifest(annotations, sketch_pool: dict, split: str = "train",
                   seed: int = 0, images: dict | None = None):
    """Pair scene-graph annotations with category-matched sketches.

    `annotations`: iterable of dicts {image_id, text, category, bbox,
    width?, height?}. `sketch_pool`: category -> list of sketch ids.
    Annotations whose category has no sketch pool are dropped and counted.
    Sketches are sampled uniformly per query, seeded.
    """
    annotations = list(annotations)
    pool_cats = set(sketch_pool)
    ann_cats = {a["category"] for a in annotations}
    kept_cats = sorted(ann_cats & pool_cats)
    if not kept_cats:
        raise ManifestError("no overlap between annotation categories and sketch pool")

    rng = np.random.default_rng(seed)
    entries = []
    image_map = dict(images) if images else {}
    dropped = 0
    dropped_cats = sorted(ann_cats - pool_cats)
    for i, a in enumerate(annotations):
        cat = a["category"]
        if cat not in pool_cats:
            dropped += 1
            continue
        pool = sketch_pool[cat]
        sketch = pool[int(rng.integers(len(pool)))]
        entries.append(CompositeQuery(
            query_id=a.get("query_id", f"q{i:06d}"),
            text=a["text"],
            sketch=sketch,
            category=cat,
            target_image_id=a["image_id"],
            target_bbox=a["bbox"] if isinstance(a["bbox"], BoundingBox) else BoundingBox(*a["bbox"]),
        ))
        if a["image_id"] not in image_map:
            image_map[a["image_id"]] = ImageRecord(
                a.get("path", ""), a.get("width", 0), a.get("height", 0))

    manifest = DatasetManifest(entries=entries, images=image_map,
                               categories=kept_cats, split=split)
    report = BuildReport(n_kept=len(entries), n_dropped=dropped,
                         dropped_categories=dropped_cats)
    return manifest, report


def compute_stats(manifest: DatasetManifest, tokenizer=None) -> DatasetStats:
    """Corpus statistics; token counts need a fitted BPE tokenizer."""
    if not manifest.entries:
        raise ManifestError("empty manifest")
    words = [len(q.text.split()) for q in manifest.entries]
    if tokenizer is not None:
        tokens = [tokenizer.count_tokens(q.text) for q in manifest.entries]
        avg_tokens = float(np.mean(tokens))
    else:
        avg_tokens = float("nan")
    areas = [q.target_bbox.area for q in manifest.entries]
    return DatasetStats(
        avg_sentence_words=float(np.mean(words)),
        avg_sentence_tokens=avg_tokens,
        n_images=len({q.target_image_id for q in manifest.entries}),
        n_sketches=len({q.sketch for q in manifest.entries}),
        n_categories=len(manifest.categories),
        n_queries=len(manifest.entries),
        avg_area_covered_pct=float(np.mean(areas)) * 100.0,
    )
