"""Build a small demo artifact set for the HTTP service and UI tests.

Creates under the given directory: a synthetic corpus with a 64-image
gallery, a (briefly trained) checkpoint, a BPE vocabulary, and a gallery
index, then prints the serve command. Deterministic for a fixed seed.
"""
import argparse
import json
from pathlib import Path

from cstbir.config import ModelConfig, TrainRunConfig
from cstbir.data.synthetic import SyntheticConfig, generate_synthetic
from cstbir.retrieval.index import build_index
from cstbir.text.bpe import BPETokenizer
from cstbir.train.checkpoint import checkpoint_fingerprint
from cstbir.train.loop import train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=0,
                    help="0 gives an untrained but fully functional service")
    ap.add_argument("--categories", type=int, default=4)
    ap.add_argument("--train", dest="n_train", type=int, default=64)
    ap.add_argument("--gallery", type=int, default=64)
    args = ap.parse_args()

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    cfg = SyntheticConfig(n_categories=args.categories, n_train=args.n_train,
                          n_val=8, n_gallery=args.gallery, seed=args.seed,
                          render_size=112)
    manifests = generate_synthetic(cfg, out / "corpus")

    tok = BPETokenizer.train([q.text for q in manifests["train"].entries],
                             max_text_len=16)
    tok.save(out / "vocab.txt")

    mc = ModelConfig(embed_dim=64, text_layers=2, vision_layers=2, heads=4,
                     patch_size=8, image_size=56, vocab_size=2000,
                     max_text_len=16, n_categories=args.categories)
    run = TrainRunConfig(model=mc, epochs=args.epochs, batch_size=32,
                         seed=args.seed, checkpoint_dir=str(out))
    model, _ = train(run, manifests["train"], tok, out_dir=out)

    index = build_index(manifests["test1k"], model,
                        model_fingerprint=checkpoint_fingerprint(out / "final.ckpt"),
                        layout="full")
    index.save(out / "gallery.idx")

    print(json.dumps({
        "out": str(out),
        "gallery_images": len(index),
        "serve": (f"cstbir serve --index-path {out / 'gallery.idx'} "
                  f"--checkpoint {out / 'final.ckpt'} --vocab {out / 'vocab.txt'} "
                  f"--gallery-manifest {out / 'corpus' / 'manifest_test1k.jsonl'}"),
    }))


if __name__ == "__main__":
    main()
