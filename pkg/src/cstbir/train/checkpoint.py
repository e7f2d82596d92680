"""Self-describing binary checkpoint container.

Layout: magic "CSTC", u32 version, u64 header length, JSON header
(config echo, metadata, array manifest), then raw little-endian array
bytes in manifest order. Byte-deterministic for identical weights.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import torch

from ..config import ModelConfig

MAGIC = b"CSTC"
VERSION = 1


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(path: str | Path, model, extra: dict | None = None) -> None:
    arrays = {}
    for name, tensor in model.state_dict().items():
        arrays[name] = tensor.detach().cpu().numpy()

    manifest = {}
    offset = 0
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        manifest[name] = {"dtype": a.dtype.str, "shape": list(a.shape),
                          "offset": offset, "nbytes": a.nbytes}
        offset += a.nbytes

    header = {
        "config": model.config.to_dict(),
        "extra": extra or {},
        "arrays": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for name in sorted(arrays):
            fh.write(np.ascontiguousarray(arrays[name]).tobytes())


def read_checkpoint(path: str | Path):
    """Returns (config dict, extra dict, {name: ndarray})."""
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise CheckpointError(f"{path}: bad magic, not a checkpoint")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported version {version}")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        try:
            header = json.loads(fh.read(hlen))
        except json.JSONDecodeError as e:
            raise CheckpointError(f"{path}: corrupt header") from e
        blob = fh.read()
    arrays = {}
    for name, m in header["arrays"].items():
        start, n = m["offset"], m["nbytes"]
        if start + n > len(blob):
            raise CheckpointError(f"{path}: truncated array data for {name}")
        arrays[name] = np.frombuffer(blob[start:start + n],
                                     dtype=np.dtype(m["dtype"])).reshape(m["shape"])
    return header["config"], header.get("extra", {}), arrays


def load_checkpoint(path: str | Path):
    """Rebuild the model from a checkpoint; returns (model, extra)."""
    from ..model.stnet import STNet

    config_dict, extra, arrays = read_checkpoint(path)
    model = STNet(ModelConfig.from_dict(config_dict))
    state = {name: torch.from_numpy(a.copy()) for name, a in arrays.items()}
    model.load_state_dict(state)
    model.eval()
    return model, extra


def checkpoint_fingerprint(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
