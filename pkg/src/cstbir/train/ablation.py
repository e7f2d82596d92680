"""Ablation presets for the seven-model study grid."""
from __future__ import annotations

ABLATIONS = {
    1: {"modality": "sketch_only", "enabled_losses": {"ct"}},
    2: {"modality": "text_only", "enabled_losses": {"ct"}},
    3: {"modality": "sketch_text", "enabled_losses": {"ct"}},
    4: {"modality": "sketch_text", "enabled_losses": {"ct", "od", "sr"}},
    5: {"modality": "sketch_text", "enabled_losses": {"ct", "cls_t", "cls_i", "sr"}},
    6: {"modality": "sketch_text", "enabled_losses": {"ct", "cls_t", "cls_i", "od"}},
    7: {"modality": "sketch_text", "enabled_losses": {"ct", "cls_t", "cls_i", "od", "sr"}},
}


def ablation_config(model_id: int) -> dict:
    """Run-config deltas (modality + enabled losses) for models 1..7.

    Model 1 is sketch-only and uses plain mean pooling of image tokens
    instead of sketch-guided attention; model 7 is the full objective set.
    """
    if model_id not in ABLATIONS:
        raise ValueError(f"model_id must be 1..7, got {model_id}")
    preset = ABLATIONS[model_id]
    return {"modality": preset["modality"],
            "enabled_losses": frozenset(preset["enabled_losses"])}
