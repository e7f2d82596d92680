"""STNet: three encoders, sketch-guided fusion, and the task heads."""
from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..config import ModelConfig
from .transformer import TextEncoder, VisionEncoder
from .fusion import (ClassifierHeads, DetectionHead, SketchDecoder,
                     mean_pool_tokens, sketch_guided_attention)


class STNet(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c = config
        self.text_encoder = TextEncoder(c.vocab_size, c.embed_dim, c.text_layers,
                                        c.heads, c.max_text_len)
        self.sketch_encoder = VisionEncoder(c.embed_dim, c.vision_layers, c.heads,
                                            c.patch_size, c.image_size, in_channels=1)
        self.image_encoder = VisionEncoder(c.embed_dim, c.vision_layers, c.heads,
                                           c.patch_size, c.image_size, in_channels=3)
        self.heads = ClassifierHeads(c.embed_dim, c.n_categories)
        self.detector = DetectionHead(c.embed_dim, c.od_grid, c.od_boxes, c.n_categories)
        self.decoder = SketchDecoder(c.embed_dim, c.grid_side, out_size=c.sketch_canvas)
        self.log_temp = nn.Parameter(torch.tensor(math.log(c.temperature_init)))

    # ------------------------------------------------------ preprocessing
    def prepare_images(self, images: np.ndarray) -> torch.Tensor:
        """(B, H, W, 3) uint8 RGB -> normalized (B, 3, s, s) tensor."""
        if images.ndim != 4 or images.shape[-1] != 3:
            raise ValueError("expected (B, H, W, 3) RGB input")
        x = torch.from_numpy(np.ascontiguousarray(images)).float() / 255.0
        x = x.permute(0, 3, 1, 2)
        s = self.config.image_size
        if x.shape[-1] != s or x.shape[-2] != s:
            x = F.interpolate(x, size=(s, s), mode="bilinear", align_corners=False)
        return (x - 0.5) / 0.5

    def prepare_sketches(self, sketches: np.ndarray) -> torch.Tensor:
        """(B, H, W) float in [0,1] -> normalized (B, 1, s, s) tensor."""
        x = torch.from_numpy(np.ascontiguousarray(sketches)).float().unsqueeze(1)
        s = self.config.image_size
        if x.shape[-1] != s or x.shape[-2] != s:
            x = F.interpolate(x, size=(s, s), mode="bilinear", align_corners=False)
        return (x - 0.5) / 0.5

    def prepare_sketch_targets(self, sketches: np.ndarray) -> torch.Tensor:
        """Reconstruction targets at the decoder canvas size, in [0, 1]."""
        x = torch.from_numpy(np.ascontiguousarray(sketches)).float().unsqueeze(1)
        s = self.config.sketch_canvas
        if x.shape[-1] != s or x.shape[-2] != s:
            x = F.interpolate(x, size=(s, s), mode="bilinear", align_corners=False)
        return x.squeeze(1).clamp(0.0, 1.0)

    # ----------------------------------------------------------- encoding
    def encode_text(self, ids: torch.Tensor):
        """Token ids (B, L) -> (CLS embedding (B, d), full token grid)."""
        grid = self.text_encoder(ids)
        return grid[:, 0, :], grid

    def encode_sketch(self, x: torch.Tensor):
        """Normalized sketch tensor (B, 1, s, s) -> (CLS embedding, grid)."""
        grid = self.sketch_encoder(x)
        return grid[:, 0, :], grid

    def encode_image(self, x: torch.Tensor) -> torch.Tensor:
        """Normalized image tensor (B, 3, s, s) -> token grid (B, 1+m, d)."""
        return self.image_encoder(x)

    # ----------------------------------------------------------- training
    def forward_batch(self, ids: torch.Tensor, sketches: torch.Tensor,
                      images: torch.Tensor, modality: str = "sketch_text") -> dict:
        """Run all branches needed by the enabled losses for one batch.

        Returns query/image embeddings plus head outputs. For
        sketch_only the query embedding is the sketch CLS and the image
        side is plain mean pooling (no sketch-guided attention); for
        text_only likewise with the text CLS.
        """
        out = {}
        image_tokens = self.encode_image(images)
        out["image_tokens"] = image_tokens

        if modality != "sketch_only":
            h_t, _ = self.encode_text(ids)
            out["h_text"] = h_t
        if modality != "text_only":
            h_s, _ = self.encode_sketch(sketches)
            out["h_sketch"] = h_s

        if modality == "sketch_text":
            att = sketch_guided_attention(image_tokens, out["h_sketch"])
            out["attention"] = att
            out["h_image"] = att.pooled
            out["query_emb"] = out["h_text"]
        elif modality == "text_only":
            out["h_image"] = mean_pool_tokens(image_tokens)
            out["query_emb"] = out["h_text"]
        else:  # sketch_only
            out["h_image"] = mean_pool_tokens(image_tokens)
            out["query_emb"] = out["h_sketch"]
        return out
