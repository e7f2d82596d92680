from .rasterize import SketchRaster, rasterize_strokes, read_stroke_file
from .manifest import (
    BoundingBox,
    CompositeQuery,
    DatasetManifest,
    DatasetStats,
    build_manifest,
    compute_stats,
)
from .synthetic import SyntheticConfig, generate_synthetic
from .sampling import Batch, sample_batch

__all__ = [
    "SketchRaster",
    "rasterize_strokes",
    "read_stroke_file",
    "BoundingBox",
    "CompositeQuery",
    "DatasetManifest",
    "DatasetStats",
    "build_manifest",
    "compute_stats",
    "SyntheticConfig",
    "generate_synthetic",
    "Batch",
    "sample_batch",
]
