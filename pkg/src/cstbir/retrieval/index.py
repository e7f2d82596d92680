"""Immutable gallery index of image embeddings.

Two layouts: "full" stores per-image token sets so sketch-guided
attention runs at query time (fidelity default); "static" stores only
sketch-free mean-pooled embeddings, faster but ignores the sketch when
scoring images.
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..data.sampling import load_image

MAGIC = b"CSTB"
VERSION = 1
LAYOUTS = {"static": 0, "full": 1}


class IndexError_(RuntimeError):
    pass


@dataclass
class GalleryIndex:
    image_ids: list
    embeddings: np.ndarray          # (N, d) float32, rows L2-normalized
    tokens: np.ndarray | None       # (N, 1+m, d) float32 when layout=full
    model_fingerprint: str
    layout: str = "full"

    def __post_init__(self):
        if len(set(self.image_ids)) != len(self.image_ids):
            raise IndexError_("duplicate image ids in index")
        norms = np.linalg.norm(self.embeddings, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-5):
            raise IndexError_("embedding rows must be unit-norm")

    def __len__(self) -> int:
        return len(self.image_ids)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    # ------------------------------------------------------------- file io
    def save(self, path: str | Path) -> None:
        ids_blob = json.dumps({"ids": self.image_ids,
                               "model_fingerprint": self.model_fingerprint},
                              sort_keys=True).encode("utf-8")
        emb = np.ascontiguousarray(self.embeddings, dtype=np.float32)
        tok = (np.ascontiguousarray(self.tokens, dtype=np.float32)
               if self.tokens is not None else None)
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", VERSION))
            fh.write(struct.pack("<B", LAYOUTS[self.layout]))
            fh.write(struct.pack("<QII", len(self.image_ids), emb.shape[1],
                                 0 if tok is None else tok.shape[1]))
            fh.write(struct.pack("<Q", len(ids_blob)))
            fh.write(ids_blob)
            fh.write(emb.tobytes())
            if tok is not None:
                fh.write(tok.tobytes())
        digest = hashlib.sha256(Path(path).read_bytes()).digest()
        with open(path, "ab") as fh:
            fh.write(digest)

    @classmethod
    def load(cls, path: str | Path) -> "GalleryIndex":
        blob = Path(path).read_bytes()
        if blob[:4] != MAGIC:
            raise IndexError_(f"{path}: bad magic")
        if hashlib.sha256(blob[:-32]).digest() != blob[-32:]:
            raise IndexError_(f"{path}: content checksum mismatch")
        off = 4
        (version,) = struct.unpack_from("<I", blob, off); off += 4
        if version != VERSION:
            raise IndexError_(f"{path}: unsupported version {version}")
        (layout_code,) = struct.unpack_from("<B", blob, off); off += 1
        n, d, t = struct.unpack_from("<QII", blob, off); off += 16
        (ids_len,) = struct.unpack_from("<Q", blob, off); off += 8
        meta = json.loads(blob[off:off + ids_len]); off += ids_len
        emb = np.frombuffer(blob, dtype=np.float32, count=n * d, offset=off)
        emb = emb.reshape(n, d).copy(); off += n * d * 4
        tokens = None
        if t:
            tokens = np.frombuffer(blob, dtype=np.float32, count=n * t * d, offset=off)
            tokens = tokens.reshape(n, t, d).copy()
        layout = {v: k for k, v in LAYOUTS.items()}[layout_code]
        return cls(image_ids=meta["ids"], embeddings=emb, tokens=tokens,
                   model_fingerprint=meta["model_fingerprint"], layout=layout)


def build_index(manifest, model, model_fingerprint: str = "",
                layout: str = "full", batch_size: int = 16) -> GalleryIndex:
    """Embed every gallery image in the manifest with the image encoder."""
    if layout not in LAYOUTS:
        raise IndexError_(f"unknown layout {layout!r}")
    image_ids = sorted(manifest.images)
    if not image_ids:
        raise IndexError_("no images to index")

    model.eval()
    all_tokens = []
    with torch.no_grad():
        for start in range(0, len(image_ids), batch_size):
            chunk = image_ids[start:start + batch_size]
            arr = np.stack([load_image(manifest, i) for i in chunk])
            tokens = model.encode_image(model.prepare_images(arr))
            all_tokens.append(tokens.numpy().astype(np.float32))
    tokens = np.concatenate(all_tokens)
    pooled = tokens[:, 1:, :].mean(axis=1)
    pooled /= np.linalg.norm(pooled, axis=1, keepdims=True)
    return GalleryIndex(
        image_ids=image_ids,
        embeddings=pooled.astype(np.float32),
        tokens=tokens if layout == "full" else None,
        model_fingerprint=model_fingerprint,
        layout=layout,
    )
