"""Report rendering: delimited metric files plus matplotlib figures."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .retrieval.metrics import MetricsReport  # noqa: E402


def write_metrics_report(report: MetricsReport, out_dir: str | Path) -> dict:
    """Write metrics.json / metrics.csv and render figures; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    json_path = out_dir / "metrics.json"
    json_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    paths["json"] = json_path

    csv_path = out_dir / "metrics.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        for k in sorted(report.recall_at):
            w.writerow([f"recall@{k}", f"{report.recall_at[k]:.4f}"])
        w.writerow(["median_rank", f"{report.median_rank:.1f}"])
        w.writerow(["n_queries", report.n_queries])
    paths["csv"] = csv_path

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ks = sorted(report.recall_at)
    ax.plot(ks, [report.recall_at[k] for k in ks], marker="o")
    ax.set_xlabel("K")
    ax.set_ylabel("Recall@K (%)")
    ax.set_ylim(0, 100)
    ax.set_title(f"{report.split}: MdR={report.median_rank:.1f}, "
                 f"n={report.n_queries}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig_path = out_dir / "recall_curve.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    paths["recall_curve"] = fig_path
    return paths


def plot_rank_histogram(ranks, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(list(ranks), bins=min(50, max(ranks)), color="tab:blue")
    ax.set_xlabel("ground-truth rank")
    ax.set_ylabel("queries")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = out_dir / "rank_histogram.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_loss_curves(history, out_dir: str | Path) -> Path:
    """Per-epoch loss components from a training history."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    epochs = [h["epoch"] for h in history]
    for key in sorted(history[0]):
        if not key.startswith("loss_"):
            continue
        vals = [h[key] for h in history]
        if any(v != 0 for v in vals):
            ax.plot(epochs, vals, label=key.removeprefix("loss_"))
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = out_dir / "loss_curves.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
