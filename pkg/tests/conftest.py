import numpy as np
import pytest
import torch

from cstbir.config import ModelConfig
from cstbir.data.synthetic import SyntheticConfig, generate_synthetic
from cstbir.text.bpe import BPETokenizer


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """Small synthetic corpus shared across the suite."""
    root = tmp_path_factory.mktemp("corpus")
    cfg = SyntheticConfig(n_categories=4, n_train=48, n_val=8, n_gallery=16,
                          seed=7, render_size=64, n_open_categories=2,
                          n_open_queries=8)
    manifests = generate_synthetic(cfg, root)
    return {"root": root, "cfg": cfg, "manifests": manifests}


@pytest.fixture(scope="session")
def tiny_tokenizer(tiny_corpus):
    texts = [q.text for q in tiny_corpus["manifests"]["train"].entries]
    return BPETokenizer.train(texts, vocab_size=300, max_text_len=16)


@pytest.fixture(scope="session")
def tiny_model_config(tiny_corpus):
    return ModelConfig(embed_dim=32, text_layers=1, vision_layers=1, heads=4,
                       patch_size=8, image_size=32, vocab_size=300,
                       max_text_len=16,
                       n_categories=len(tiny_corpus["manifests"]["train"].categories),
                       od_grid=2, od_boxes=1, sketch_canvas=224)


@pytest.fixture(scope="session")
def tiny_model(tiny_model_config):
    from cstbir.model.stnet import STNet

    torch.manual_seed(0)
    model = STNet(tiny_model_config)
    model.eval()
    return model


@pytest.fixture(scope="session")
def tiny_run(tiny_corpus, tiny_model_config, tiny_tokenizer, tmp_path_factory):
    """A short full-objective training run with its artifact directory."""
    from cstbir.config import TrainRunConfig
    from cstbir.train.loop import train

    out = tmp_path_factory.mktemp("run")
    run = TrainRunConfig(model=tiny_model_config, epochs=1, batch_size=8,
                         seed=3, checkpoint_dir=str(out))
    model, history = train(run, tiny_corpus["manifests"]["train"],
                           tiny_tokenizer, out_dir=out)
    return {"model": model, "history": history, "out": out, "run": run}


@pytest.fixture(scope="session")
def tiny_index(tiny_corpus, tiny_run):
    from cstbir.retrieval.index import build_index

    return build_index(tiny_corpus["manifests"]["test1k"], tiny_run["model"],
                       model_fingerprint="fp-test", layout="full")


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
