"""Two-stage retrieval baselines built on sketch classification."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .retrieval.search import RankedResults, search

log = logging.getLogger(__name__)


class BaselineError(RuntimeError):
    pass


@dataclass
class ObjectDescriptionTable:
    """category -> visual descriptions that never name the category."""

    table: dict = field(default_factory=dict)

    def descriptions(self, category: str) -> list:
        if category not in self.table or not self.table[category]:
            raise BaselineError(f"no description for category {category!r}")
        return self.table[category]

    def validate(self) -> None:
        for cat, descs in self.table.items():
            for d in descs:
                n = len(d.split())
                if not 4 <= n <= 10:
                    raise BaselineError(
                        f"description for {cat!r} has {n} words, want 4-10: {d!r}")
                if cat.lower() in d.lower().split():
                    raise BaselineError(
                        f"description for {cat!r} names the category: {d!r}")

    @classmethod
    def load(cls, path: str | Path) -> "ObjectDescriptionTable":
        """Read UTF-8 "category<TAB>description" lines; repeats accumulate."""
        table: dict = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cat, desc = line.split("\t", 1)
            table.setdefault(cat, []).append(desc)
        t = cls(table)
        t.validate()
        return t

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for cat in sorted(self.table):
                for d in self.table[cat]:
                    fh.write(f"{cat}\t{d}\n")


class SketchClassifier:
    """First stage of the two-stage pipeline.

    mode "trained_head": argmax of the pretrained classification head.
    mode "embedding_nearest_class_mean": nearest class-mean sketch
    embedding, the zero-shot stand-in for open-category universes.
    """

    def __init__(self, encoder, categories, head=None, class_means=None):
        if not categories:
            raise BaselineError("empty category universe")
        self.encoder = encoder
        self.categories = list(categories)
        self.head = head
        self.class_means = class_means  # (C, d), rows unit-norm

    @classmethod
    def fit_class_means(cls, encoder, sketches_by_category: dict,
                        image_size: int) -> "SketchClassifier":
        cats = sorted(sketches_by_category)
        if not cats:
            raise BaselineError("empty category universe")
        means = []
        for cat in cats:
            embs = [_embed_sketch(encoder, s, image_size) for s in sketches_by_category[cat]]
            m = torch.stack(embs).mean(dim=0)
            means.append(m / m.norm())
        return cls(encoder, cats, class_means=torch.stack(means))

    def classify(self, sketch: np.ndarray, mode: str = "trained_head"):
        """Returns (category, confidence)."""
        if len(self.categories) == 1:
            return self.categories[0], 1.0
        emb = _embed_sketch(self.encoder, sketch,
                            self.encoder.image_size)
        if mode == "trained_head":
            if self.head is None:
                raise BaselineError("no trained head available")
            probs = F.softmax(self.head(emb), dim=-1)
            i = int(probs.argmax())
            return self.categories[i], float(probs[i])
        if mode == "embedding_nearest_class_mean":
            if self.class_means is None:
                raise BaselineError("class means not fitted")
            sims = self.class_means @ (emb / emb.norm())
            i = int(sims.argmax())
            return self.categories[i], float(sims[i])
        raise BaselineError(f"unknown classifier mode {mode!r}")


def _embed_sketch(encoder, sketch: np.ndarray, image_size: int) -> torch.Tensor:
    x = torch.from_numpy(np.ascontiguousarray(sketch)).float()[None, None]
    if x.shape[-1] != image_size:
        x = F.interpolate(x, size=(image_size, image_size), mode="bilinear",
                          align_corners=False)
    x = (x - 0.5) / 0.5
    with torch.no_grad():
        return encoder(x)[0, 0, :]


def complete_text(text: str, category: str, mode: str = "name",
                  desc_table: ObjectDescriptionTable | None = None,
                  rng=None) -> str:
    """Splice the predicted object into the incomplete text (prefix).

    mode "name" prepends the category; mode "description" prepends a
    seeded-random description from the table. Insertion is mechanical:
    text already containing the category is still prefixed, but flagged.
    """
    if mode == "name":
        inserted = category
    elif mode == "description":
        if desc_table is None:
            raise BaselineError("description mode needs a description table")
        descs = desc_table.descriptions(category)
        rng = rng if rng is not None else np.random.default_rng(0)
        inserted = descs[int(rng.integers(len(descs)))]
    else:
        raise BaselineError(f"unknown completion mode {mode!r}")
    if category.lower() in text.lower().split():
        log.warning("text already mentions %r; inserting anyway", category)
    return f"{inserted} {text}".strip()


def two_stage_search(index, model, tokenizer, *, sketch: np.ndarray,
                     text: str, classifier: SketchClassifier,
                     classifier_mode: str = "trained_head",
                     completion_mode: str = "name",
                     desc_table: ObjectDescriptionTable | None = None,
                     rng=None, query_id: str = "", k: int = 10,
                     target_image_id: str | None = None,
                     oracle_category: str | None = None) -> RankedResults:
    """Classify the sketch, complete the text, then rank text-only.

    `oracle_category` bypasses the classifier (ground-truth category),
    used for pipeline-equivalence checks.
    """
    if oracle_category is not None:
        category = oracle_category
    else:
        category, _ = classifier.classify(sketch, mode=classifier_mode)
    full_text = complete_text(text, category, mode=completion_mode,
                              desc_table=desc_table, rng=rng)
    return search(index, model, tokenizer, query_id=query_id, text=full_text,
                  sketch=None, target_image_id=target_image_id, k=k,
                  mode="text_only")


# The description tables consumed here were produced externally (one
# automatic generation setup plus manual annotation); regeneration is out
# of scope, tables ship as editable TSV files.
