import numpy as np
import pytest
import torch

from cstbir.config import ModelConfig
from cstbir.model.stnet import STNet


def test_text_encoding_shapes_and_determinism(tiny_model, tiny_tokenizer):
    ids = torch.tensor([tiny_tokenizer.tokenize("red, near the top")])
    h1, grid1 = tiny_model.encode_text(ids)
    h2, _ = tiny_model.encode_text(ids)
    assert h1.shape == (1, 32)
    assert grid1.shape == (1, 16, 32)
    assert torch.equal(h1, h2)


def test_text_position_sensitivity(tiny_model, tiny_tokenizer):
    a = torch.tensor([tiny_tokenizer.tokenize("red above blue")])
    b = torch.tensor([tiny_tokenizer.tokenize("blue above red")])
    ha, _ = tiny_model.encode_text(a)
    hb, _ = tiny_model.encode_text(b)
    assert float((ha - hb).detach().norm()) > 0


def test_oov_id_rejected(tiny_model):
    ids = torch.full((1, 16), 9999, dtype=torch.long)
    with pytest.raises(ValueError):
        tiny_model.encode_text(ids)


def test_sketch_token_grid_length():
    cfg = ModelConfig(embed_dim=64, patch_size=16, image_size=224,
                      n_categories=4, vocab_size=100)
    torch.manual_seed(0)
    model = STNet(cfg)
    model.eval()
    x = torch.zeros(1, 1, 224, 224)
    _, grid = model.encode_sketch(x)
    assert grid.shape == (1, 1 + 196, 64)


def test_sketch_size_mismatch_rejected(tiny_model):
    with pytest.raises(ValueError):
        tiny_model.encode_sketch(torch.zeros(1, 1, 64, 64))


def test_sketch_zero_vs_one_distinct(tiny_model):
    s = tiny_model.config.image_size
    with torch.no_grad():
        h0, _ = tiny_model.encode_sketch(torch.zeros(1, 1, s, s))
        h1, _ = tiny_model.encode_sketch(torch.ones(1, 1, s, s))
    assert float((h0 - h1).norm()) > 0


def test_image_resize_contract(tiny_model):
    img = (np.random.default_rng(0).random((1, 448, 448, 3)) * 255).astype(np.uint8)
    grid = tiny_model.encode_image(tiny_model.prepare_images(img))
    g = tiny_model.config.grid_side
    assert grid.shape == (1, 1 + g * g, tiny_model.config.embed_dim)


def test_non_rgb_rejected(tiny_model):
    gray = np.zeros((1, 64, 64, 1), dtype=np.uint8)
    with pytest.raises(ValueError):
        tiny_model.prepare_images(gray)


def test_distinct_images_distinct_tokens(tiny_model):
    rng = np.random.default_rng(3)
    imgs = (rng.random((100, 32, 32, 3)) * 255).astype(np.uint8)
    with torch.no_grad():
        grids = tiny_model.encode_image(tiny_model.prepare_images(imgs))
    flat = grids.reshape(100, -1)
    for i in range(0, 98, 7):
        assert not torch.equal(flat[i], flat[i + 1])


def test_eval_mode_purity(tiny_model):
    s = tiny_model.config.image_size
    x = torch.rand(2, 3, s, s)
    with torch.no_grad():
        a = tiny_model.encode_image(x)
        b = tiny_model.encode_image(x)
    assert torch.equal(a, b)


def test_gradient_reaches_every_encoder_block(tiny_model, tiny_tokenizer, tiny_corpus):
    from cstbir import objectives
    from cstbir.data.sampling import sample_batch

    model = tiny_model
    m = tiny_corpus["manifests"]["train"]
    batch = sample_batch(m, 4, np.random.default_rng(0))
    ids = torch.tensor([tiny_tokenizer.tokenize(t) for t in batch.texts])
    out = model.forward_batch(ids, model.prepare_sketches(batch.sketches),
                              model.prepare_images(batch.images))
    labels = torch.from_numpy(batch.labels)
    loss = (objectives.contrastive_loss(out["query_emb"], out["h_image"], model.log_temp)
            + objectives.classification_loss(model.heads(out["h_text"], "text"), labels)
            + objectives.classification_loss(model.heads(out["h_image"], "image"), labels))
    model.zero_grad()
    loss.backward()
    for prefix in ("text_encoder", "sketch_encoder", "image_encoder"):
        block = [p for n, p in model.named_parameters() if n.startswith(prefix)]
        assert any(p.grad is not None and float(p.grad.abs().sum()) > 0 for p in block), prefix
    model.zero_grad()
