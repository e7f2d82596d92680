from .bpe import BPETokenizer

__all__ = ["BPETokenizer"]
