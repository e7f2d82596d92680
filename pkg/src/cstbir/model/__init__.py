from .transformer import TextEncoder, VisionEncoder
from .fusion import sketch_guided_attention, DetectionHead, SketchDecoder
from .stnet import STNet

__all__ = ["TextEncoder", "VisionEncoder", "sketch_guided_attention",
           "DetectionHead", "SketchDecoder", "STNet"]
