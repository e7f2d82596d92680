"""Full-scan cosine ranking of composite queries and split evaluation."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..data.sampling import load_sketch
from .index import GalleryIndex
from .metrics import MetricsReport, median_rank, recall_at_k

MODES = ("stnet", "text_only", "sketch_only")


class SearchError(RuntimeError):
    pass


@dataclass
class RankedResults:
    query_id: str
    results: list = field(default_factory=list)  # [(image_id, score)] top-k
    gt_rank: int | None = None


def _encode_query(model, tokenizer, text: str | None, sketch: np.ndarray | None):
    """Returns (h_text, h_sketch) unit vectors as available."""
    h_t = h_s = None
    with torch.no_grad():
        if text is not None:
            ids = torch.tensor([tokenizer.tokenize(text)], dtype=torch.long)
            h_t, _ = model.encode_text(ids)
            h_t = (h_t / h_t.norm(dim=-1, keepdim=True))[0]
        if sketch is not None:
            x = model.prepare_sketches(sketch[None])
            h_s, _ = model.encode_sketch(x)
            h_s = (h_s / h_s.norm(dim=-1, keepdim=True))[0]
    return h_t, h_s


def score_gallery(index: GalleryIndex, model, tokenizer,
                  text: str | None = None, sketch: np.ndarray | None = None,
                  mode: str = "stnet") -> np.ndarray:
    """Cosine score of the query against every gallery image."""
    if len(index) == 0:
        raise SearchError("empty index")
    if mode not in MODES:
        raise SearchError(f"unknown mode {mode!r}")
    h_t, h_s = _encode_query(model, tokenizer, text, sketch)

    if mode == "stnet":
        if h_t is None or h_s is None:
            raise SearchError("stnet mode needs both text and sketch")
        if index.tokens is None:
            raise SearchError("stnet mode needs a full-layout index")
        with torch.no_grad():
            tokens = torch.from_numpy(index.tokens)       # (N, 1+m, d)
            # sketch CLS is unnormalized at attention time, matching training
            _, h_s_raw = _raw_sketch(model, sketch)
            logits = torch.einsum("ntd,d->nt", tokens, h_s_raw)
            alpha = torch.softmax(logits, dim=1)
            attended = alpha.unsqueeze(-1) * tokens
            pooled = attended[:, 1:, :].mean(dim=1)
            pooled = pooled / pooled.norm(dim=-1, keepdim=True)
            scores = (pooled @ h_t).numpy()
        return scores.astype(np.float64)

    if mode == "text_only":
        if h_t is None:
            raise SearchError("text_only mode needs text")
        return (index.embeddings @ h_t.numpy()).astype(np.float64)

    if h_s is None:
        raise SearchError("sketch_only mode needs a sketch")
    return (index.embeddings @ h_s.numpy()).astype(np.float64)


def _raw_sketch(model, sketch: np.ndarray):
    with torch.no_grad():
        x = model.prepare_sketches(sketch[None])
        h_s, _ = model.encode_sketch(x)
    return x, h_s[0]


def rank_order(index: GalleryIndex, scores: np.ndarray) -> list:
    """Indices sorted by descending score, ties broken by ascending id."""
    return sorted(range(len(index)),
                  key=lambda i: (-scores[i], index.image_ids[i]))


def search(index: GalleryIndex, model, tokenizer, *, query_id: str = "",
           text: str | None = None, sketch: np.ndarray | None = None,
           target_image_id: str | None = None, k: int = 10,
           mode: str = "stnet") -> RankedResults:
    """Exact full-scan search; returns the top-k and the ground-truth rank."""
    if k > len(index):
        raise SearchError(f"k={k} exceeds gallery size {len(index)}")
    scores = score_gallery(index, model, tokenizer, text=text, sketch=sketch,
                           mode=mode)
    order = rank_order(index, scores)
    gt_rank = None
    if target_image_id is not None:
        pos = {index.image_ids[i]: r for r, i in enumerate(order, start=1)}
        if target_image_id not in pos:
            raise SearchError(f"target {target_image_id} absent from gallery")
        gt_rank = pos[target_image_id]
    results = [(index.image_ids[i], float(scores[i])) for i in order[:k]]
    return RankedResults(query_id=query_id, results=results, gt_rank=gt_rank)


def evaluate(index: GalleryIndex, model, tokenizer, manifest, k_list,
             mode: str = "stnet", out_dir: str | Path | None = None) -> MetricsReport:
    """Rank every manifest query against the gallery and report metrics.

    Per-query ranks are persisted to `per_query_ranks.csv` for audit when
    out_dir is given.
    """
    ranks, rows = [], []
    for q in manifest.entries:
        sketch = load_sketch(manifest, q) if mode != "text_only" else None
        text = q.text if mode != "sketch_only" else None
        res = search(index, model, tokenizer, query_id=q.query_id, text=text,
                     sketch=sketch, target_image_id=q.target_image_id,
                     k=min(max(k_list), len(index)), mode=mode)
        ranks.append(res.gt_rank)
        rows.append((q.query_id, q.target_image_id, res.gt_rank))

    report = MetricsReport(
        recall_at={k: recall_at_k(ranks, k) for k in k_list},
        median_rank=median_rank(ranks),
        n_queries=len(ranks),
        split=manifest.split,
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "per_query_ranks.csv", "w", newline="",
                  encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["query_id", "target_image_id", "gt_rank"])
            w.writerows(rows)
    return report
