"""HTTP search service consumed by the web UI and API clients."""
from __future__ import annotations

import base64
import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from pydantic import BaseModel

from .baselines import SketchClassifier, complete_text
from .retrieval.index import GalleryIndex, build_index
from .retrieval.search import search
from .train.checkpoint import checkpoint_fingerprint, load_checkpoint
from .text.bpe import BPETokenizer

SEARCH_MODES = ("stnet", "text_only", "sketch_only", "two_stage")


class SearchRequest(BaseModel):
    sketch_png: str | None = None  # base64 grayscale PNG
    text: str | None = None
    k: int = 10
    mode: str = "stnet"


class IndexRequest(BaseModel):
    manifest: str
    checkpoint: str
    layout: str = "full"


@dataclass
class Engine:
    """Immutable bundle the service queries; swapped atomically on reindex."""

    index: GalleryIndex
    model: object
    tokenizer: BPETokenizer
    fingerprint: str
    categories: list = field(default_factory=list)
    image_paths: dict = field(default_factory=dict)  # image_id -> Path
    classifier: SketchClassifier | None = None


def load_engine(index_path: str | Path, checkpoint_path: str | Path,
                vocab_path: str | Path, manifest=None,
                classifier: SketchClassifier | None = None) -> Engine:
    model, extra = load_checkpoint(checkpoint_path)
    index = GalleryIndex.load(index_path)
    tokenizer = BPETokenizer.load(vocab_path)
    image_paths = {}
    categories = list(extra.get("categories", []))
    if manifest is not None:
        image_paths = {i: manifest.image_path(i) for i in manifest.images}
        if not categories:
            categories = list(manifest.categories)
    return Engine(index=index, model=model, tokenizer=tokenizer,
                  fingerprint=checkpoint_fingerprint(checkpoint_path),
                  categories=categories, image_paths=image_paths,
                  classifier=classifier)


def _decode_sketch(b64: str) -> np.ndarray:
    from PIL import Image

    try:
        raw = base64.b64decode(b64, validate=True)
        img = Image.open(io.BytesIO(raw)).convert("L")
    except Exception as e:
        raise HTTPException(status_code=400, detail=f"undecodable sketch image: {e}")
    if img.size != (224, 224):
        img = img.resize((224, 224), Image.BILINEAR)
    return np.asarray(img, dtype=np.float32) / 255.0


def create_app(engine: Engine | None = None) -> FastAPI:
    app = FastAPI(title="cstbir search service")
    app.state.engine = engine

    def current_engine() -> Engine:
        eng = app.state.engine
        if eng is None:
            raise HTTPException(status_code=503, detail="no index loaded")
        return eng

    @app.post("/api/search")
    def api_search(req: SearchRequest):
        t0 = time.perf_counter()
        eng = current_engine()
        if req.mode not in SEARCH_MODES:
            raise HTTPException(status_code=400, detail=f"unknown mode {req.mode!r}")
        if req.k < 1:
            raise HTTPException(status_code=400, detail="k must be >= 1")
        if req.mode != "text_only" and not req.sketch_png:
            raise HTTPException(status_code=400, detail="sketch required for this mode")
        if req.mode != "sketch_only" and not req.text:
            raise HTTPException(status_code=400, detail="text required for this mode")

        sketch = _decode_sketch(req.sketch_png) if req.sketch_png else None
        clamped = req.k > len(eng.index)
        k = min(req.k, len(eng.index))

        if req.mode == "two_stage":
            if eng.classifier is None:
                raise HTTPException(status_code=400,
                                    detail="two_stage mode needs a fitted classifier")
            category, _ = eng.classifier.classify(
                sketch, mode="embedding_nearest_class_mean")
            text = complete_text(req.text, category)
            res = search(eng.index, eng.model, eng.tokenizer, text=text,
                         sketch=None, k=k, mode="text_only")
        else:
            res = search(eng.index, eng.model, eng.tokenizer, text=req.text,
                         sketch=sketch, k=k, mode=req.mode)

        results = [
            {"image_id": iid, "score": score, "rank": r,
             "thumbnail_url": f"/thumbnails/{iid}"}
            for r, (iid, score) in enumerate(res.results, start=1)
        ]
        return {"results": results, "clamped": clamped, "mode": req.mode,
                "latency_ms": (time.perf_counter() - t0) * 1000.0}

    @app.post("/api/index")
    def api_index(req: IndexRequest):
        from .data.manifest import DatasetManifest

        eng = current_engine()
        try:
            manifest = DatasetManifest.load(req.manifest)
            model, _ = load_checkpoint(req.checkpoint)
            fp = checkpoint_fingerprint(req.checkpoint)
            index = build_index(manifest, model, model_fingerprint=fp,
                                layout=req.layout)
        except Exception as e:
            raise HTTPException(status_code=400, detail=str(e))
        app.state.engine = Engine(
            index=index, model=model, tokenizer=eng.tokenizer, fingerprint=fp,
            categories=eng.categories or list(manifest.categories),
            image_paths={i: manifest.image_path(i) for i in manifest.images},
            classifier=eng.classifier)
        return {"status": "ok", "index_size": len(index)}

    @app.get("/api/health")
    def api_health():
        eng = app.state.engine
        if eng is None:
            return {"status": "no_index", "index_size": 0, "model_fingerprint": ""}
        return {"status": "ok", "index_size": len(eng.index),
                "model_fingerprint": eng.fingerprint}

    @app.get("/api/categories")
    def api_categories():
        return {"categories": current_engine().categories}

    @app.get("/thumbnails/{image_id}")
    def thumbnail(image_id: str):
        eng = current_engine()
        path = eng.image_paths.get(image_id)
        if path is None or not Path(path).exists():
            raise HTTPException(status_code=404, detail="unknown image")
        return FileResponse(path)

    return app
