"""Model and training-run configuration."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

LOSS_NAMES = ("ct", "cls_t", "cls_i", "od", "sr")


@dataclass
class ModelConfig:
    """Architecture hyperparameters shared by all model components."""

    embed_dim: int = 64
    text_layers: int = 2
    vision_layers: int = 2
    heads: int = 4
    patch_size: int = 16
    image_size: int = 224
    vocab_size: int = 2000
    max_text_len: int = 16
    n_categories: int = 258
    od_grid: int = 7
    od_boxes: int = 2
    temperature_init: float = 0.07
    loss_weights: dict = field(default_factory=lambda: {k: 1.0 for k in LOSS_NAMES})
    sr_alpha: float = 1.0
    sr_beta: float = 1.0
    # size of the reconstruction target; the decoder always emits this
    sketch_canvas: int = 224

    def __post_init__(self):
        if self.image_size % self.patch_size != 0:
            raise ValueError(
                f"image_size {self.image_size} not divisible by patch_size {self.patch_size}"
            )
        if self.embed_dim % self.heads != 0:
            raise ValueError(
                f"embed_dim {self.embed_dim} not divisible by heads {self.heads}"
            )
        if self.n_categories < 2:
            raise ValueError("need at least 2 categories")
        if self.od_grid < 1 or self.od_boxes < 1:
            raise ValueError("od_grid and od_boxes must be >= 1")
        for k in self.loss_weights:
            if k not in LOSS_NAMES:
                raise ValueError(f"unknown loss name {k!r}")
            if self.loss_weights[k] < 0:
                raise ValueError(f"negative weight for loss {k!r}")
        for k in LOSS_NAMES:
            self.loss_weights.setdefault(k, 1.0)

    @property
    def grid_side(self) -> int:
        return self.image_size // self.patch_size

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


MODALITIES = ("sketch_only", "text_only", "sketch_text")


@dataclass
class TrainRunConfig:
    """One training run: model, optimization, and ablation switches."""

    model: ModelConfig = field(default_factory=ModelConfig)
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 3e-4
    seed: int = 0
    enabled_losses: frozenset = frozenset(LOSS_NAMES)
    modality: str = "sketch_text"
    checkpoint_dir: str = "runs"
    grad_clip: float = 1.0

    def __post_init__(self):
        self.enabled_losses = frozenset(self.enabled_losses)
        unknown = self.enabled_losses - set(LOSS_NAMES)
        if unknown:
            raise ValueError(f"unknown losses {sorted(unknown)}")
        if "ct" not in self.enabled_losses:
            raise ValueError("contrastive loss must stay enabled; retrieval depends on it")
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["enabled_losses"] = sorted(self.enabled_losses)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainRunConfig":
        d = dict(d)
        if isinstance(d.get("model"), dict):
            d["model"] = ModelConfig.from_dict(d["model"])
        known = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def save(self, path: str | Path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "TrainRunConfig":
        return cls.from_dict(yaml.safe_load(Path(path).read_text()))
