"""Transformer encoders for text and patch-based vision inputs."""
from __future__ import annotations

import torch
import torch.nn as nn

from ..text.bpe import PAD


class EncoderBlock(nn.Module):
    """Pre-LN bidirectional transformer block."""

    def __init__(self, d: int, heads: int, mlp_ratio: int = 4):
        super().__init__()
        self.ln1 = nn.LayerNorm(d)
        self.attn = nn.MultiheadAttention(d, heads, batch_first=True)
        self.ln2 = nn.LayerNorm(d)
        self.mlp = nn.Sequential(
            nn.Linear(d, mlp_ratio * d), nn.GELU(), nn.Linear(mlp_ratio * d, d))

    def forward(self, x, key_padding_mask=None):
        h = self.ln1(x)
        a, _ = self.attn(h, h, h, key_padding_mask=key_padding_mask,
                         need_weights=False)
        x = x + a
        x = x + self.mlp(self.ln2(x))
        return x


class TextEncoder(nn.Module):
    def __init__(self, vocab_size: int, d: int, layers: int, heads: int, max_len: int):
        super().__init__()
        self.vocab_size = vocab_size
        self.max_len = max_len
        self.tok_emb = nn.Embedding(vocab_size, d)
        self.pos_emb = nn.Parameter(torch.zeros(max_len, d))
        nn.init.normal_(self.pos_emb, std=0.02)
        self.blocks = nn.ModuleList(EncoderBlock(d, heads) for _ in range(layers))
        self.ln_final = nn.LayerNorm(d)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        """(B, L) token ids -> (B, L, d). Position 0 is the CLS slot."""
        if ids.shape[1] != self.max_len:
            raise ValueError(f"expected length {self.max_len}, got {ids.shape[1]}")
        if int(ids.max()) >= self.vocab_size or int(ids.min()) < 0:
            raise ValueError("token id out of vocabulary range")
        pad_mask = ids == PAD
        x = self.tok_emb(ids) + self.pos_emb
        for blk in self.blocks:
            x = blk(x, key_padding_mask=pad_mask)
        return self.ln_final(x)


class VisionEncoder(nn.Module):
    """ViT-style encoder: patchify, project, prepend CLS, transform."""

    def __init__(self, d: int, layers: int, heads: int, patch_size: int,
                 image_size: int, in_channels: int):
        super().__init__()
        if image_size % patch_size != 0:
            raise ValueError("image_size must be divisible by patch_size")
        self.image_size = image_size
        self.patch_size = patch_size
        self.grid_side = image_size // patch_size
        m = self.grid_side ** 2
        self.patch_proj = nn.Conv2d(in_channels, d, kernel_size=patch_size,
                                    stride=patch_size)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, d))
        nn.init.normal_(self.cls_token, std=0.02)
        self.pos_emb = nn.Parameter(torch.zeros(1 + m, d))
        nn.init.normal_(self.pos_emb, std=0.02)
        self.blocks = nn.ModuleList(EncoderBlock(d, heads) for _ in range(layers))
        self.ln_final = nn.LayerNorm(d)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """(B, C, H, W) -> (B, 1+m, d) token grid; token 0 is CLS."""
        if x.shape[-1] != self.image_size or x.shape[-2] != self.image_size:
            raise ValueError(
                f"expected {self.image_size}x{self.image_size}, got {tuple(x.shape[-2:])}")
        p = self.patch_proj(x)                      # (B, d, g, g)
        p = p.flatten(2).transpose(1, 2)            # (B, m, d)
        cls = self.cls_token.expand(p.shape[0], -1, -1).to(p.dtype)
        x = torch.cat([cls, p], dim=1) + self.pos_emb
        for blk in self.blocks:
            x = blk(x)
        return self.ln_final(x)
