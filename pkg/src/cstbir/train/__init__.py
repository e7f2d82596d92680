from .checkpoint import save_checkpoint, load_checkpoint, checkpoint_fingerprint
from .ablation import ablation_config
from .loop import train, pretrain_sketch_classifier

__all__ = ["save_checkpoint", "load_checkpoint", "checkpoint_fingerprint",
           "ablation_config", "train", "pretrain_sketch_classifier"]
