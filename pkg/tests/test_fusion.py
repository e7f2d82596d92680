import math

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from cstbir.model.fusion import (ClassifierHeads, DetectionHead, SketchDecoder,
                                 sketch_guided_attention)


def test_orthogonal_sketch_gives_uniform_alpha():
    m = 5
    tokens = torch.zeros(1 + m, 4)
    tokens[:, 0] = 1.0
    sketch = torch.tensor([0.0, 1.0, 0.0, 0.0])
    out = sketch_guided_attention(tokens, sketch)
    assert torch.allclose(out.alpha, torch.full((1 + m,), 1.0 / (1 + m)))


def test_dominant_logit_saturates():
    tokens = torch.zeros(6, 8)
    tokens[3, 0] = 20.0
    sketch = torch.zeros(8)
    sketch[0] = 1.0
    out = sketch_guided_attention(tokens, sketch)
    assert float(out.alpha[3]) > 0.999


def test_matches_direct_formula_oracle():
    torch.manual_seed(0)
    for _ in range(20):
        tokens = torch.randn(5, 7, dtype=torch.float64)
        sketch = torch.randn(7, dtype=torch.float64)
        out = sketch_guided_attention(tokens, sketch)
        # independent straight-line computation
        logits = [float(tokens[i] @ sketch) for i in range(5)]
        mx = max(logits)
        exps = [math.exp(v - mx) for v in logits]
        z = sum(exps)
        alpha = [e / z for e in exps]
        pooled = sum(alpha[i] * tokens[i] for i in range(1, 5)) / 4
        assert float((out.pooled - pooled).abs().max()) < 1e-6
        assert abs(float(out.alpha.sum()) - 1.0) < 1e-6


def test_alpha_normalization_and_scaling_equivariance():
    torch.manual_seed(1)
    tokens = torch.randn(9, 6)
    sketch = torch.randn(6)
    a1 = sketch_guided_attention(tokens, sketch).alpha
    a2 = sketch_guided_attention(tokens, 3.5 * sketch).alpha
    assert abs(float(a1.sum()) - 1.0) < 1e-6
    assert int(a1.argmax()) == int(a2.argmax())


def test_dim_mismatch_rejected():
    with pytest.raises(ValueError):
        sketch_guided_attention(torch.randn(4, 6), torch.randn(5))


def test_classifier_zero_init_uniform():
    heads = ClassifierHeads(8, 10)
    torch.nn.init.zeros_(heads.text.weight)
    torch.nn.init.zeros_(heads.text.bias)
    logits = heads(torch.randn(8), "text")
    assert torch.allclose(logits, torch.zeros(10))
    with pytest.raises(ValueError):
        heads(torch.randn(8), "audio")


def test_classifier_c258():
    heads = ClassifierHeads(16, 258)
    assert heads(torch.randn(16), "image").shape == (258,)


def test_detection_shape_full_scale_config():
    head = DetectionHead(32, grid=7, boxes=2, n_categories=258)
    tokens = torch.randn(1, 1 + 49, 32)
    out = head(tokens)
    assert out.shape == (1, 7, 7, 268)
    assert out.numel() == 7 * 7 * 268 == 13132


def test_detection_minimal_config():
    head = DetectionHead(8, grid=1, boxes=1, n_categories=1)
    out = head(torch.randn(1, 1 + 4, 8))
    assert out.shape == (1, 1, 1, 6)


@settings(max_examples=25, deadline=None)
@given(s=st.integers(1, 4), b=st.integers(1, 3), c=st.integers(1, 6))
def test_detection_channel_law(s, b, c):
    head = DetectionHead(8, grid=s, boxes=b, n_categories=c)
    out = head(torch.randn(1, 1 + 16, 8))
    assert out.shape[-1] == 5 * b + c


def test_detection_box_outputs_bounded():
    torch.manual_seed(2)
    head = DetectionHead(8, grid=2, boxes=2, n_categories=3)
    with torch.no_grad():
        for _ in range(100):
            out = head(torch.randn(1, 1 + 16, 8) * 5)
            boxes = out[..., :10]
            assert float(boxes.min()) >= 0.0 and float(boxes.max()) <= 1.0


def test_detection_grid_too_fine_rejected():
    head = DetectionHead(8, grid=5, boxes=1, n_categories=2)
    with pytest.raises(ValueError):
        head(torch.randn(1, 1 + 16, 8))


@pytest.mark.parametrize("g,n_up", [(14, 4), (7, 5), (28, 3)])
def test_decoder_block_schedule(g, n_up):
    dec = SketchDecoder(16, g, out_size=224)
    ups = sum(1 for blk in dec.blocks
              if isinstance(blk[0], torch.nn.ConvTranspose2d))
    assert ups == n_up
    assert len(dec.blocks) == 8
    out = dec(torch.randn(1, 1 + g * g, 16))
    assert out.shape == (1, 1, 224, 224)


def test_decoder_non_power_of_two_path():
    # 6 -> 192 via doublings, then resized to 224
    dec = SketchDecoder(8, 6, out_size=224)
    out = dec(torch.randn(1, 1 + 36, 8))
    assert out.shape == (1, 1, 224, 224)


def test_decoder_gradient_flows():
    dec = SketchDecoder(8, 4, out_size=224)
    x = torch.randn(1, 1 + 16, 8, requires_grad=True)
    target = torch.rand(1, 224, 224)
    from cstbir.objectives import reconstruction_loss

    loss = reconstruction_loss(dec(x), target)
    loss.backward()
    assert float(x.grad.abs().sum()) > 0
