"""Sketch-guided attention and the four task heads."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

log = logging.getLogger(__name__)


@dataclass
class AttentionOutput:
    alpha: torch.Tensor            # (B, 1+m) weights, rows sum to 1
    attended_tokens: torch.Tensor  # (B, 1+m, d)
    pooled: torch.Tensor           # (B, d) mean over the m spatial tokens


def sketch_guided_attention(tokens: torch.Tensor, sketch_cls: torch.Tensor) -> AttentionOutput:
    """Weight image tokens by their dot product with the sketch CLS vector.

    The CLS token takes part in the softmax but the pooled embedding
    averages only the m spatial tokens.
    """
    squeeze = tokens.dim() == 2
    if squeeze:
        tokens = tokens.unsqueeze(0)
        sketch_cls = sketch_cls.unsqueeze(0)
    if tokens.shape[-1] != sketch_cls.shape[-1]:
        raise ValueError(
            f"dim mismatch: tokens d={tokens.shape[-1]}, sketch d={sketch_cls.shape[-1]}")
    logits = torch.einsum("bnd,bd->bn", tokens, sketch_cls)
    alpha = torch.softmax(logits, dim=-1)
    attended = alpha.unsqueeze(-1) * tokens
    pooled = attended[:, 1:, :].mean(dim=1)
    if squeeze:
        return AttentionOutput(alpha[0], attended[0], pooled[0])
    return AttentionOutput(alpha, attended, pooled)


def mean_pool_tokens(tokens: torch.Tensor) -> torch.Tensor:
    """Plain mean over spatial tokens, used when no sketch guides attention."""
    return tokens[..., 1:, :].mean(dim=-2)


class ClassifierHeads(nn.Module):
    """Affine object-class heads for the text and image embeddings."""

    def __init__(self, d: int, n_categories: int):
        super().__init__()
        self.text = nn.Linear(d, n_categories)
        self.image = nn.Linear(d, n_categories)

    def forward(self, embedding: torch.Tensor, head: str) -> torch.Tensor:
        if head == "text":
            return self.text(embedding)
        if head == "image":
            return self.image(embedding)
        raise ValueError(f"unknown head {head!r}")


class DetectionHead(nn.Module):
    """Grid detector over the sketch-attended image tokens.

    Emits (S, S, 5B + C): per cell, B boxes of (x, y, w, h, confidence)
    squashed into [0, 1] and C raw class channels.
    """

    def __init__(self, d: int, grid: int, boxes: int, n_categories: int):
        super().__init__()
        self.grid = grid
        self.boxes = boxes
        self.n_categories = n_categories
        self.proj = nn.Linear(d, 5 * boxes + n_categories)

    def forward(self, attended_tokens: torch.Tensor) -> torch.Tensor:
        """(B, 1+m, d) attended tokens -> (B, S, S, 5B+C)."""
        spatial = attended_tokens[:, 1:, :]
        b, m, d = spatial.shape
        g = int(math.isqrt(m))
        if g * g != m:
            raise ValueError(f"{m} spatial tokens do not form a square grid")
        if g < self.grid:
            raise ValueError(f"token grid {g} smaller than detection grid {self.grid}")
        fmap = spatial.transpose(1, 2).reshape(b, d, g, g)
        fmap = F.adaptive_avg_pool2d(fmap, self.grid)
        cells = fmap.flatten(2).transpose(1, 2)         # (B, S*S, d)
        out = self.proj(cells).reshape(b, self.grid, self.grid, -1)
        nb = 5 * self.boxes
        boxes = torch.sigmoid(out[..., :nb])
        return torch.cat([boxes, out[..., nb:]], dim=-1)


class SketchDecoder(nn.Module):
    """Reconstruct the query sketch from attended image tokens.

    Eight convolution-batchnorm-rectifier blocks; upsampling blocks
    (fractionally strided) doubling resolution are interleaved with
    stride-1 refinement blocks, then a final 1-channel conv yields
    logits at the sketch canvas size.
    """

    N_BLOCKS = 8

    def __init__(self, d: int, grid_side: int, out_size: int = 224):
        super().__init__()
        self.grid_side = grid_side
        self.out_size = out_size
        n_up = max(0, math.ceil(math.log2(out_size / grid_side)))
        if n_up > self.N_BLOCKS:
            raise ValueError(f"grid {grid_side} too small for {out_size} output")
        self.pre_final_size = grid_side * 2 ** n_up
        if self.pre_final_size != out_size:
            log.info("decoder inserts nearest-resize %d -> %d before final block",
                     self.pre_final_size, out_size)

        kinds = []
        ups_left, refines_left = n_up, self.N_BLOCKS - n_up
        while len(kinds) < self.N_BLOCKS:
            if ups_left:
                kinds.append("up")
                ups_left -= 1
            if refines_left and len(kinds) < self.N_BLOCKS:
                kinds.append("refine")
                refines_left -= 1

        blocks = []
        ch = d
        for kind in kinds:
            if kind == "up":
                out_ch = max(4, ch // 2)
                conv = nn.ConvTranspose2d(ch, out_ch, kernel_size=4, stride=2, padding=1)
            else:
                out_ch = ch
                conv = nn.Conv2d(ch, out_ch, kernel_size=3, padding=1)
            blocks.append(nn.Sequential(conv, nn.BatchNorm2d(out_ch), nn.ReLU()))
            ch = out_ch
        self.blocks = nn.ModuleList(blocks)
        self.final = nn.Conv2d(ch, 1, kernel_size=3, padding=1)

    def forward(self, attended_tokens: torch.Tensor) -> torch.Tensor:
        """(B, 1+m, d) -> (B, 1, out_size, out_size) logits."""
        spatial = attended_tokens[:, 1:, :]
        b, m, d = spatial.shape
        g = int(math.isqrt(m))
        if g != self.grid_side or g * g != m:
            raise ValueError(f"expected {self.grid_side}^2 spatial tokens, got {m}")
        x = spatial.transpose(1, 2).reshape(b, d, g, g)
        for blk in self.blocks:
            x = blk(x)
        if x.shape[-1] != self.out_size:
            x = F.interpolate(x, size=(self.out_size, self.out_size), mode="nearest")
        return self.final(x)
