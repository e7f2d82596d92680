"""The five training objectives and their weighted sum."""
from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .config import LOSS_NAMES

LAMBDA_COORD = 5.0
LAMBDA_NOOBJ = 0.5
DICE_EPS = 1.0
LOG_TEMP_MIN = math.log(0.01)
LOG_TEMP_MAX = math.log(100.0)


@dataclass
class LossBundle:
    l_ct: torch.Tensor
    l_cls_t: torch.Tensor
    l_cls_i: torch.Tensor
    l_od: torch.Tensor
    l_sr: torch.Tensor
    total: torch.Tensor

    def to_floats(self) -> dict:
        return {
            "ct": float(self.l_ct.detach()), "cls_t": float(self.l_cls_t.detach()),
            "cls_i": float(self.l_cls_i.detach()), "od": float(self.l_od.detach()),
            "sr": float(self.l_sr.detach()), "total": float(self.total.detach()),
        }


def contrastive_loss(query_embs: torch.Tensor, image_embs: torch.Tensor,
                     log_temperature: torch.Tensor) -> torch.Tensor:
    """Symmetric in-batch InfoNCE over cosine similarities.

    Row i of each matrix is a matched pair; every off-diagonal pairing is
    a negative. Temperature is exp(log_temperature) clamped to [0.01, 100].
    """
    if query_embs.shape != image_embs.shape:
        raise ValueError("embedding matrices must have matching shapes")
    qn = query_embs.norm(dim=-1)
    in_ = image_embs.norm(dim=-1)
    if float(qn.detach().min()) == 0 or float(in_.detach().min()) == 0:
        raise ValueError("zero-norm embedding row")
    q = query_embs / qn.unsqueeze(-1)
    v = image_embs / in_.unsqueeze(-1)
    tau = torch.exp(log_temperature.clamp(LOG_TEMP_MIN, LOG_TEMP_MAX))
    sim = q @ v.t() / tau
    targets = torch.arange(sim.shape[0], device=sim.device)
    return 0.5 * (F.cross_entropy(sim, targets) + F.cross_entropy(sim.t(), targets))


def classification_loss(logits: torch.Tensor, label) -> torch.Tensor:
    """Softmax cross-entropy; accepts a single C-vector or a (B, C) batch."""
    if logits.dim() == 1:
        logits = logits.unsqueeze(0)
        label = torch.as_tensor([int(label)], device=logits.device)
    else:
        label = torch.as_tensor(label, device=logits.device)
    c = logits.shape[-1]
    if int(label.min()) < 0 or int(label.max()) >= c:
        raise ValueError(f"label out of range [0, {c})")
    return F.cross_entropy(logits, label)


def iou(a, b) -> float:
    """Intersection over union of two (x, y, w, h) boxes."""
    ax, ay, aw, ah = _box_tuple(a)
    bx, by, bw, bh = _box_tuple(b)
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def _box_tuple(b):
    if hasattr(b, "x"):
        return float(b.x), float(b.y), float(b.w), float(b.h)
    return tuple(float(v) for v in b)


def _iou_t(ax, ay, aw, ah, bx, by, bw, bh):
    """Differentiable IoU on torch scalars, boxes as (x, y, w, h)."""
    zero = ax * 0
    ix = torch.clamp(torch.minimum(ax + aw, bx + bw) - torch.maximum(ax, bx), min=0)
    iy = torch.clamp(torch.minimum(ay + ah, by + bh) - torch.maximum(ay, by), min=0)
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return torch.where(union > 0, inter / union.clamp(min=1e-12), zero)


def detection_loss(pred: torch.Tensor, gt: list, n_boxes: int,
                   class_mode: str = "squared_error") -> torch.Tensor:
    """YOLO-style multipart detection loss for one prediction grid.

    `pred` is (S, S, 5B+C) with per-box (x, y, w, h, confidence); x, y are
    cell-relative, w, h image-relative, all in [0, 1]. `gt` is a list of
    (box, class_index) pairs; boxes are (x, y, w, h) top-left normalized.
    The box with highest IoU in the ground-truth center cell is
    responsible: its coordinates regress to the target (square-rooted
    extents), its confidence to the IoU; every other confidence decays to
    zero. Class channels incur per-cell squared error against one-hot
    (or cross-entropy with class_mode="cross_entropy").
    """
    s = pred.shape[0]
    nb = 5 * n_boxes
    boxes = pred[..., :nb].reshape(s, s, n_boxes, 5)
    classes = pred[..., nb:]

    loss = pred.sum() * 0
    responsible = torch.zeros(s, s, n_boxes, dtype=torch.bool)
    for box, cls_idx in gt:
        gx, gy, gw, gh = _box_tuple(box)
        cx, cy = gx + gw / 2, gy + gh / 2
        if not (0 <= cx < 1 and 0 <= cy < 1):
            raise ValueError(f"ground-truth center ({cx:.3f}, {cy:.3f}) outside [0,1)^2")
        col, row = int(cx * s), int(cy * s)
        tx, ty = cx * s - col, cy * s - row

        cell = boxes[row, col]  # (B, 5)
        ious = []
        for b in range(n_boxes):
            px, py, pw, ph = cell[b, 0], cell[b, 1], cell[b, 2], cell[b, 3]
            pcx, pcy = (col + px) / s, (row + py) / s
            ious.append(_iou_t(pcx - pw / 2, pcy - ph / 2, pw, ph,
                               torch.as_tensor(gx, dtype=pred.dtype),
                               torch.as_tensor(gy, dtype=pred.dtype),
                               torch.as_tensor(gw, dtype=pred.dtype),
                               torch.as_tensor(gh, dtype=pred.dtype)))
        ious = torch.stack(ious)
        r = int(ious.argmax())
        responsible[row, col, r] = True

        rb = cell[r]
        loss = loss + LAMBDA_COORD * (
            (rb[0] - tx) ** 2 + (rb[1] - ty) ** 2
            + (rb[2].clamp(min=0).sqrt() - math.sqrt(gw)) ** 2
            + (rb[3].clamp(min=0).sqrt() - math.sqrt(gh)) ** 2)
        loss = loss + (rb[4] - ious[r]) ** 2

        onehot = torch.zeros_like(classes[row, col])
        onehot[int(cls_idx)] = 1.0
        if class_mode == "squared_error":
            loss = loss + ((classes[row, col] - onehot) ** 2).sum()
        elif class_mode == "cross_entropy":
            loss = loss + F.cross_entropy(classes[row, col].unsqueeze(0),
                                          torch.as_tensor([int(cls_idx)]))
        else:
            raise ValueError(f"unknown class_mode {class_mode!r}")

    conf = boxes[..., 4]
    loss = loss + LAMBDA_NOOBJ * (conf[~responsible] ** 2).sum()
    return loss


def detection_loss_batch(pred: torch.Tensor, gts: list, n_boxes: int,
                         class_mode: str = "squared_error") -> torch.Tensor:
    """Mean single-sample detection loss over a batch; `gts[i]` is the
    ground-truth list for `pred[i]`."""
    losses = [detection_loss(pred[i], gts[i], n_boxes, class_mode)
              for i in range(pred.shape[0])]
    return torch.stack(losses).mean()


def reconstruction_loss(pred_logits: torch.Tensor, target: torch.Tensor,
                        alpha: float = 1.0, beta: float = 1.0) -> torch.Tensor:
    """alpha * BCE + beta * DICE between the decoded sketch and target.

    `pred_logits` is (B, 1, H, W) or (1, H, W); `target` matches spatially
    with values in [0, 1]. DICE = 1 - (2*sum(pq)+eps)/(sum p + sum q + eps)
    with eps = 1, computed per sample and averaged.
    """
    if pred_logits.dim() == 3:
        pred_logits = pred_logits.unsqueeze(0)
    if target.dim() == 2:
        target = target.unsqueeze(0)
    if pred_logits.shape[-2:] != target.shape[-2:] or pred_logits.shape[0] != target.shape[0]:
        raise ValueError(
            f"shape mismatch: pred {tuple(pred_logits.shape)} vs target {tuple(target.shape)}")
    logits = pred_logits.squeeze(1)
    bce = F.binary_cross_entropy_with_logits(logits, target.to(logits.dtype))
    p = torch.sigmoid(logits).flatten(1)
    q = target.to(logits.dtype).flatten(1)
    dice = 1.0 - (2 * (p * q).sum(dim=1) + DICE_EPS) / (p.sum(dim=1) + q.sum(dim=1) + DICE_EPS)
    return alpha * bce + beta * dice.mean()


def total_loss(components: dict, weights: dict | None = None) -> LossBundle:
    """Weighted sum of the five losses; absent components count as 0."""
    weights = dict(weights or {})
    for k, w in weights.items():
        if w < 0:
            raise ValueError(f"negative weight for {k!r}")
    zero = None
    for v in components.values():
        zero = v * 0
        break
    if zero is None:
        zero = torch.tensor(0.0)
    vals = {k: components.get(k, zero) for k in LOSS_NAMES}
    total = sum(weights.get(k, 1.0) * vals[k] for k in LOSS_NAMES)
    return LossBundle(l_ct=vals["ct"], l_cls_t=vals["cls_t"], l_cls_i=vals["cls_i"],
                      l_od=vals["od"], l_sr=vals["sr"], total=total)
