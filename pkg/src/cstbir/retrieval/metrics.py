"""Ranking metrics: Recall@K and Median Rank."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class MetricsReport:
    recall_at: dict = field(default_factory=dict)  # K -> percentage
    median_rank: float = 0.0
    n_queries: int = 0
    split: str = ""

    def to_dict(self) -> dict:
        return {"recall_at": {str(k): v for k, v in self.recall_at.items()},
                "median_rank": self.median_rank,
                "n_queries": self.n_queries, "split": self.split}


def recall_at_k(gt_ranks, k: int) -> float:
    """Percentage of queries whose ground truth ranks within the top k."""
    ranks = list(gt_ranks)
    if not ranks:
        raise ValueError("empty rank list")
    if any(r < 1 for r in ranks):
        raise ValueError("ranks are 1-based")
    return 100.0 * sum(1 for r in ranks if r <= k) / len(ranks)


def median_rank(gt_ranks) -> float:
    """Median ground-truth rank; even counts average the two middle values."""
    ranks = sorted(gt_ranks)
    if not ranks:
        raise ValueError("empty rank list")
    n = len(ranks)
    if n % 2:
        return float(ranks[n // 2])
    return (ranks[n // 2 - 1] + ranks[n // 2]) / 2.0
