from .metrics import MetricsReport, median_rank, recall_at_k
from .index import GalleryIndex, build_index
from .search import RankedResults, search, evaluate

__all__ = ["MetricsReport", "median_rank", "recall_at_k", "GalleryIndex",
           "build_index", "RankedResults", "search", "evaluate"]
