"""Command-line entry points for the full pipeline."""
from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .config import ModelConfig, TrainRunConfig
from .data.manifest import BoundingBox, DatasetManifest, build_manifest, compute_stats
from .data.synthetic import SyntheticConfig, generate_synthetic
from .text.bpe import BPETokenizer


@click.group()
def cli():
    """Composite sketch+text image retrieval toolkit."""


def _fail(msg: str) -> None:
    click.echo(f"error: {json.dumps(msg)}", err=True)
    sys.exit(1)


def _load_tokenizer(vocab, manifest=None, max_text_len=16):
    if vocab and Path(vocab).exists():
        return BPETokenizer.load(vocab)
    if manifest is None:
        _fail(f"vocabulary file {vocab} not found")
    tok = BPETokenizer.train([q.text for q in manifest.entries],
                             max_text_len=max_text_len)
    if vocab:
        tok.save(vocab)
    return tok


@cli.command("build-dataset")
@click.option("--annotations", required=True, type=click.Path(exists=True),
              help="JSONL of {image_id, text, category, bbox, path?} records")
@click.option("--sketch-pool", "sketch_pool_path", required=True,
              type=click.Path(exists=True), help="JSON map category -> sketch ids")
@click.option("--split", default="train", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def build_dataset_cmd(annotations, sketch_pool_path, split, seed, out):
    """Pair annotations with category-matched sketches into a manifest."""
    records = []
    with open(annotations, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                rec["bbox"] = BoundingBox(*rec["bbox"])
                records.append(rec)
    pool = json.loads(Path(sketch_pool_path).read_text())
    manifest, report = build_manifest(records, pool, split=split, seed=seed)
    manifest.save(out)
    click.echo(json.dumps({"queries": report.n_kept, "dropped": report.n_dropped,
                           "dropped_categories": report.dropped_categories,
                           "out": str(out)}))


@cli.command("gen-synthetic")
@click.option("--out", required=True, type=click.Path())
@click.option("--categories", default=8, show_default=True)
@click.option("--train", "n_train", default=256, show_default=True)
@click.option("--val", "n_val", default=32, show_default=True)
@click.option("--gallery", "n_gallery", default=64, show_default=True)
@click.option("--open-categories", default=0, show_default=True)
@click.option("--canvas", default=224, show_default=True)
@click.option("--render-size", default=112, show_default=True)
@click.option("--seed", default=0, show_default=True)
def gen_synthetic_cmd(out, categories, n_train, n_val, n_gallery,
                      open_categories, canvas, render_size, seed):
    """Generate the glyph-scene corpus."""
    cfg = SyntheticConfig(n_categories=categories, n_train=n_train, n_val=n_val,
                          n_gallery=n_gallery, canvas_size=canvas, seed=seed,
                          render_size=render_size, n_open_categories=open_categories)
    manifests = generate_synthetic(cfg, out)
    click.echo(json.dumps({s: len(m.entries) for s, m in manifests.items()}))


@cli.command("stats")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", type=click.Path(), default=None)
def stats_cmd(manifest_path, vocab):
    """Corpus statistics for a manifest."""
    manifest = DatasetManifest.load(manifest_path)
    tok = _load_tokenizer(vocab, manifest) if vocab else \
        BPETokenizer.train([q.text for q in manifest.entries])
    s = compute_stats(manifest, tok)
    click.echo(json.dumps(s.__dict__, sort_keys=True))


def _model_config_options(f):
    opts = [
        click.option("--embed-dim", default=64, show_default=True),
        click.option("--layers", default=2, show_default=True),
        click.option("--heads", default=4, show_default=True),
        click.option("--patch-size", default=8, show_default=True),
        click.option("--image-size", default=56, show_default=True),
        click.option("--vocab-size", default=2000, show_default=True),
        click.option("--max-text-len", default=16, show_default=True),
        click.option("--od-grid", default=7, show_default=True),
        click.option("--od-boxes", default=2, show_default=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _make_model_config(manifest, embed_dim, layers, heads, patch_size,
                       image_size, vocab_size, max_text_len, od_grid, od_boxes):
    return ModelConfig(embed_dim=embed_dim, text_layers=layers,
                       vision_layers=layers, heads=heads, patch_size=patch_size,
                       image_size=image_size, vocab_size=vocab_size,
                       max_text_len=max_text_len,
                       n_categories=len(manifest.categories),
                       od_grid=od_grid, od_boxes=od_boxes)


@cli.command("pretrain-sketch")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--epochs", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--lr", default=3e-4, show_default=True)
@click.option("--out", required=True, type=click.Path())
@_model_config_options
def pretrain_sketch_cmd(manifest_path, epochs, seed, lr, out, **model_kw):
    """Pretrain the sketch encoder on category classification; writes an
    STNet init checkpoint with the pretrained sketch branch."""
    import torch

    from .model.stnet import STNet
    from .train.checkpoint import save_checkpoint
    from .train.loop import init_sketch_branch, pretrain_sketch_classifier

    manifest = DatasetManifest.load(manifest_path)
    mc = _make_model_config(manifest, **model_kw)
    encoder, head, history = pretrain_sketch_classifier(
        manifest, mc, epochs=epochs, seed=seed, lr=lr)
    torch.manual_seed(seed)
    model = STNet(mc)
    init_sketch_branch(model, encoder)
    save_checkpoint(out, model, extra={"pretrain_history": history,
                                       "categories": list(manifest.categories)})
    click.echo(json.dumps({"out": str(out), "history": history}))


@cli.command("train")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", type=click.Path(), default=None,
              help="BPE vocabulary; trained from the manifest when absent")
@click.option("--epochs", default=10, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--lr", default=3e-4, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--ablation", default=7, show_default=True,
              help="model grid preset 1..7")
@click.option("--out", required=True, type=click.Path())
@_model_config_options
def train_cmd(manifest_path, vocab, epochs, batch_size, lr, seed, ablation,
              out, **model_kw):
    """Train STNet with the selected ablation preset."""
    from .report import plot_loss_curves
    from .train.ablation import ablation_config
    from .train.loop import train

    manifest = DatasetManifest.load(manifest_path)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tok = _load_tokenizer(vocab or str(out_dir / "vocab.txt"), manifest,
                          max_text_len=model_kw["max_text_len"])
    mc = _make_model_config(manifest, **model_kw)
    run = TrainRunConfig(model=mc, epochs=epochs, batch_size=batch_size,
                         learning_rate=lr, seed=seed,
                         checkpoint_dir=str(out_dir), **ablation_config(ablation))
    _, history = train(run, manifest, tok, out_dir=out_dir)
    if history:
        plot_loss_curves(history, out_dir)
    click.echo(json.dumps({"out": str(out_dir),
                           "enabled_losses": sorted(run.enabled_losses),
                           "final": history[-1] if history else None}))


@cli.command("index")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--layout", default="full", show_default=True,
              type=click.Choice(["full", "static"]))
def index_cmd(manifest_path, checkpoint, out, layout):
    """Embed the gallery images of a manifest into an index file."""
    from .retrieval.index import build_index
    from .train.checkpoint import checkpoint_fingerprint, load_checkpoint

    manifest = DatasetManifest.load(manifest_path)
    model, _ = load_checkpoint(checkpoint)
    index = build_index(manifest, model,
                        model_fingerprint=checkpoint_fingerprint(checkpoint),
                        layout=layout)
    index.save(out)
    click.echo(json.dumps({"out": str(out), "images": len(index),
                           "layout": layout}))


@cli.command("evaluate")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--vocab", required=True, type=click.Path(exists=True))
@click.option("--k", "k_spec", default="10,20,50,100", show_default=True)
@click.option("--mode", default="stnet", show_default=True,
              type=click.Choice(["stnet", "text_only", "sketch_only"]))
@click.option("--out", required=True, type=click.Path())
def evaluate_cmd(manifest_path, checkpoint, vocab, k_spec, mode, out):
    """Rank every query of a split and write the metrics report + figures."""
    from .report import write_metrics_report
    from .retrieval.index import build_index
    from .retrieval.search import evaluate
    from .train.checkpoint import checkpoint_fingerprint, load_checkpoint

    manifest = DatasetManifest.load(manifest_path)
    model, _ = load_checkpoint(checkpoint)
    tok = BPETokenizer.load(vocab)
    k_list = [int(k) for k in k_spec.split(",")]
    layout = "full" if mode == "stnet" else "static"
    index = build_index(manifest, model,
                        model_fingerprint=checkpoint_fingerprint(checkpoint),
                        layout=layout)
    report = evaluate(index, model, tok, manifest, k_list, mode=mode, out_dir=out)
    write_metrics_report(report, out)
    click.echo(json.dumps(report.to_dict(), sort_keys=True))


@cli.command("serve")
@click.option("--port", default=lambda: int(os.environ.get("CSTBIR_PORT", 8080)),
              show_default="8080 or $CSTBIR_PORT")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--index-path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--vocab", required=True, type=click.Path(exists=True))
@click.option("--gallery-manifest", type=click.Path(exists=True), default=None,
              help="manifest whose image files back the thumbnails")
def serve_cmd(port, host, index_path, checkpoint, vocab, gallery_manifest):
    """Run the HTTP search service."""
    import uvicorn

    from .service import create_app, load_engine

    manifest = DatasetManifest.load(gallery_manifest) if gallery_manifest else None
    engine = load_engine(index_path, checkpoint, vocab, manifest=manifest)
    uvicorn.run(create_app(engine), host=host, port=port)


def main():
    try:
        cli(standalone_mode=False)
    except click.UsageError as e:
        click.echo(f"error: {json.dumps(str(e))}", err=True)
        sys.exit(2)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.exceptions.Exit as e:
        sys.exit(e.exit_code)
    except Exception as e:
        _fail(f"{type(e).__name__}: {e}")


if __name__ == "__main__":
    main()
