"""Deterministic training loops for STNet and the sketch classifier."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .. import objectives
from ..config import TrainRunConfig
from ..data.manifest import BoundingBox, DatasetManifest
from ..data.sampling import load_sketch, sample_batch
from ..model.stnet import STNet
from ..model.transformer import VisionEncoder
from .checkpoint import save_checkpoint


class TrainingError(RuntimeError):
    pass


def _batch_losses(model: STNet, out: dict, batch, targets_sr, run: TrainRunConfig) -> dict:
    """Compute every enabled loss whose inputs exist for this modality."""
    comps = {}
    enabled = run.enabled_losses
    labels = torch.from_numpy(batch.labels)

    comps["ct"] = objectives.contrastive_loss(out["query_emb"], out["h_image"],
                                              model.log_temp)
    if "cls_t" in enabled and "h_text" in out:
        comps["cls_t"] = objectives.classification_loss(
            model.heads(out["h_text"], "text"), labels)
    if "cls_i" in enabled and run.modality == "sketch_text":
        comps["cls_i"] = objectives.classification_loss(
            model.heads(out["h_image"], "image"), labels)
    if run.modality == "sketch_text" and ("od" in enabled or "sr" in enabled):
        att = out["attention"]
        if "od" in enabled:
            pred = model.detector(att.attended_tokens)
            gts = [[(BoundingBox(*batch.bboxes[i]), int(batch.labels[i]))]
                   for i in range(len(batch))]
            comps["od"] = objectives.detection_loss_batch(pred, gts,
                                                          model.config.od_boxes)
        if "sr" in enabled:
            logits = model.decoder(att.attended_tokens)
            comps["sr"] = objectives.reconstruction_loss(
                logits, targets_sr, model.config.sr_alpha, model.config.sr_beta)
    return comps


def train(run: TrainRunConfig, manifest: DatasetManifest, tokenizer,
          out_dir: str | Path | None = None):
    """Train STNet on a manifest; returns (model, history).

    Deterministic given run.seed: fixed initialization and a fixed batch
    order per (seed, epoch). Writes a checkpoint per epoch plus `final.ckpt`
    and appends per-epoch metrics to `metrics.jsonl` when out_dir is set.
    """
    if manifest.split != "train":
        raise TrainingError(f"expected a train split, got {manifest.split!r}")
    torch.manual_seed(run.seed)
    model = STNet(run.model)
    opt = torch.optim.Adam(model.parameters(), lr=run.learning_rate)

    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        run.save(out_dir / "run_config.yaml")

    cache: dict = {}
    history = []
    steps = max(1, len(manifest.entries) // run.batch_size)
    model.train()
    for epoch in range(run.epochs):
        rng = np.random.default_rng([run.seed, epoch])
        sums = {k: 0.0 for k in objectives.LOSS_NAMES}
        sums["total"] = 0.0
        for step in range(steps):
            batch = sample_batch(manifest, run.batch_size, rng, cache=cache)
            ids = torch.tensor([tokenizer.tokenize(t) for t in batch.texts],
                               dtype=torch.long)
            sketches = model.prepare_sketches(batch.sketches)
            images = model.prepare_images(batch.images)
            targets_sr = model.prepare_sketch_targets(batch.sketches)

            out = model.forward_batch(ids, sketches, images, modality=run.modality)
            comps = _batch_losses(model, out, batch, targets_sr, run)
            bundle = objectives.total_loss(comps, run.model.loss_weights)
            for name, val in bundle.to_floats().items():
                if not math.isfinite(val):
                    raise TrainingError(
                        f"non-finite loss component {name!r}={val} "
                        f"at epoch {epoch} step {step}")

            opt.zero_grad()
            bundle.total.backward()
            if run.grad_clip:
                nn.utils.clip_grad_norm_(model.parameters(), run.grad_clip)
            opt.step()

            for k, v in bundle.to_floats().items():
                sums[k] += v

        record = {"epoch": epoch,
                  **{f"loss_{k}": sums[k] / steps for k in sums}}
        history.append(record)
        if out_dir is not None:
            with open(out_dir / "metrics.jsonl", "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
            save_checkpoint(out_dir / f"epoch_{epoch:03d}.ckpt", model,
                            extra={"epoch": epoch, "seed": run.seed})

    model.eval()
    if out_dir is not None:
        save_checkpoint(out_dir / "final.ckpt", model,
                        extra={"epochs": run.epochs, "seed": run.seed,
                               "modality": run.modality,
                               "enabled_losses": sorted(run.enabled_losses)})
    return model, history


def pretrain_sketch_classifier(manifest: DatasetManifest, model_config,
                               epochs: int, seed: int = 0, lr: float = 3e-4,
                               batch_size: int = 32):
    """Train the sketch encoder plus a linear head for category prediction.

    Returns (encoder, head, history); the encoder weights initialize the
    sketch branch of STNet. With epochs=0 the returned weights equal the
    seeded initialization.
    """
    by_cat: dict = {}
    for q in manifest.entries:
        by_cat.setdefault(q.category, []).append(q)
    if len(by_cat) < 2 or any(len(v) < 2 for v in by_cat.values()):
        raise TrainingError("need at least 2 categories with 2 sketches each")

    torch.manual_seed(seed)
    c = model_config
    encoder = VisionEncoder(c.embed_dim, c.vision_layers, c.heads,
                            c.patch_size, c.image_size, in_channels=1)
    head = nn.Linear(c.embed_dim, len(manifest.categories))
    opt = torch.optim.Adam(list(encoder.parameters()) + list(head.parameters()), lr=lr)
    cat_index = {cat: i for i, cat in enumerate(manifest.categories)}

    cache: dict = {}
    entries = list(manifest.entries)
    history = []
    encoder.train()
    for epoch in range(epochs):
        rng = np.random.default_rng([seed, epoch])
        order = rng.permutation(len(entries))
        total, correct, loss_sum, n_steps = 0, 0, 0.0, 0
        for start in range(0, len(order), batch_size):
            idx = order[start:start + batch_size]
            qs = [entries[i] for i in idx]
            rasters = np.stack([load_sketch(manifest, q, cache) for q in qs])
            x = torch.from_numpy(rasters).float().unsqueeze(1)
            if x.shape[-1] != c.image_size:
                x = F.interpolate(x, size=(c.image_size, c.image_size),
                                  mode="bilinear", align_corners=False)
            x = (x - 0.5) / 0.5
            labels = torch.tensor([cat_index[q.category] for q in qs])

            logits = head(encoder(x)[:, 0, :])
            loss = F.cross_entropy(logits, labels)
            opt.zero_grad()
            loss.backward()
            opt.step()

            loss_sum += float(loss.detach())
            n_steps += 1
            correct += int((logits.argmax(dim=1) == labels).sum())
            total += len(qs)
        history.append({"epoch": epoch, "loss": loss_sum / n_steps,
                        "train_accuracy": correct / total})
    encoder.eval()
    return encoder, head, history


def init_sketch_branch(model: STNet, encoder: VisionEncoder) -> None:
    """Copy pretrained sketch-classifier weights into STNet's sketch encoder."""
    model.sketch_encoder.load_state_dict(encoder.state_dict())
