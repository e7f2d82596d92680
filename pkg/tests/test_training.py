import json

import pytest
import torch

from cstbir.config import LOSS_NAMES, ModelConfig, TrainRunConfig
from cstbir.model.stnet import STNet
from cstbir.train.ablation import ABLATIONS, ablation_config
from cstbir.train.checkpoint import (CheckpointError, checkpoint_fingerprint,
                                     load_checkpoint, read_checkpoint,
                                     save_checkpoint)
from cstbir.train.loop import (TrainingError, init_sketch_branch,
                               pretrain_sketch_classifier, train)


def small_run(config, **kw):
    base = dict(model=config, epochs=1, batch_size=8, seed=3)
    base.update(kw)
    return TrainRunConfig(**base)


def test_rejects_non_train_split(tiny_corpus, tiny_model_config, tiny_tokenizer):
    with pytest.raises(TrainingError):
        train(small_run(tiny_model_config), tiny_corpus["manifests"]["val"],
              tiny_tokenizer)


def test_zero_epochs_equals_seeded_init(tiny_corpus, tiny_model_config,
                                        tiny_tokenizer):
    model, history = train(small_run(tiny_model_config, epochs=0, seed=11),
                           tiny_corpus["manifests"]["train"], tiny_tokenizer)
    assert history == []
    torch.manual_seed(11)
    ref = STNet(tiny_model_config)
    for (na, a), (nb, b) in zip(sorted(model.state_dict().items()),
                                sorted(ref.state_dict().items())):
        assert na == nb
        assert torch.equal(a, b), na


def test_same_seed_reproduces_weights_bytes(tiny_corpus, tiny_model_config,
                                            tiny_tokenizer, tmp_path):
    m = tiny_corpus["manifests"]["train"]
    paths = []
    for tag in ("a", "b"):
        model, _ = train(small_run(tiny_model_config, batch_size=16, seed=5),
                         m, tiny_tokenizer)
        p = tmp_path / f"{tag}.ckpt"
        save_checkpoint(p, model)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert checkpoint_fingerprint(paths[0]) == checkpoint_fingerprint(paths[1])


def test_different_seeds_diverge(tiny_corpus, tiny_model_config, tiny_tokenizer,
                                 tmp_path):
    m = tiny_corpus["manifests"]["train"]
    blobs = []
    for seed in (5, 6):
        model, _ = train(small_run(tiny_model_config, epochs=0, seed=seed),
                         m, tiny_tokenizer)
        p = tmp_path / f"s{seed}.ckpt"
        save_checkpoint(p, model)
        blobs.append(p.read_bytes())
    assert blobs[0] != blobs[1]


def test_history_logs_every_component(tiny_run):
    rec = tiny_run["history"][0]
    for k in LOSS_NAMES:
        assert f"loss_{k}" in rec
        assert rec[f"loss_{k}"] >= 0.0
    assert rec["loss_total"] > 0.0


def test_disabled_losses_log_zero(tiny_corpus, tiny_model_config, tiny_tokenizer):
    run = small_run(tiny_model_config, batch_size=16,
                    **ablation_config(2))  # text only, contrastive only
    _, history = train(run, tiny_corpus["manifests"]["train"], tiny_tokenizer)
    rec = history[0]
    assert rec["loss_ct"] > 0
    for k in ("cls_t", "cls_i", "od", "sr"):
        assert rec[f"loss_{k}"] == 0.0


def test_loss_descends(tiny_corpus, tiny_model_config, tiny_tokenizer):
    run = small_run(tiny_model_config, epochs=3, batch_size=16, seed=0,
                    **ablation_config(3))
    _, history = train(run, tiny_corpus["manifests"]["train"], tiny_tokenizer)
    assert history[-1]["loss_total"] < history[0]["loss_total"]


def test_artifacts_written(tiny_run):
    out = tiny_run["out"]
    assert (out / "run_config.yaml").exists()
    assert (out / "final.ckpt").exists()
    assert (out / "epoch_000.ckpt").exists()
    lines = (out / "metrics.jsonl").read_text().splitlines()
    assert len(lines) == 1
    rec = json.loads(lines[0])
    assert rec["epoch"] == 0
    back = TrainRunConfig.load(out / "run_config.yaml")
    assert back.seed == tiny_run["run"].seed
    assert back.enabled_losses == tiny_run["run"].enabled_losses


def test_checkpoint_round_trip_exact(tiny_run, tiny_tokenizer, tmp_path):
    model = tiny_run["model"]
    p = tmp_path / "rt.ckpt"
    save_checkpoint(p, model, extra={"note": 1})
    back, extra = load_checkpoint(p)
    assert extra == {"note": 1}
    for name, tensor in model.state_dict().items():
        assert torch.equal(tensor, back.state_dict()[name]), name
    ids = torch.tensor([tiny_tokenizer.tokenize("red, near the top")])
    with torch.no_grad():
        a, _ = model.encode_text(ids)
        b, _ = back.encode_text(ids)
    assert torch.equal(a, b)


def test_checkpoint_bad_magic(tmp_path):
    p = tmp_path / "bad.ckpt"
    p.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(CheckpointError):
        read_checkpoint(p)


def test_checkpoint_truncated(tiny_run, tmp_path):
    p = tmp_path / "trunc.ckpt"
    save_checkpoint(p, tiny_run["model"])
    blob = p.read_bytes()
    p.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(CheckpointError):
        read_checkpoint(p)


def test_ablation_presets():
    assert set(ABLATIONS) == set(range(1, 8))
    assert ablation_config(1) == {"modality": "sketch_only",
                                  "enabled_losses": frozenset({"ct"})}
    assert ablation_config(2)["modality"] == "text_only"
    assert ablation_config(3) == {"modality": "sketch_text",
                                  "enabled_losses": frozenset({"ct"})}
    assert ablation_config(4)["enabled_losses"] == frozenset({"ct", "od", "sr"})
    assert ablation_config(5)["enabled_losses"] == frozenset(
        {"ct", "cls_t", "cls_i", "sr"})
    assert ablation_config(6)["enabled_losses"] == frozenset(
        {"ct", "cls_t", "cls_i", "od"})
    assert ablation_config(7)["enabled_losses"] == frozenset(LOSS_NAMES)
    for bad in (0, 8, -1):
        with pytest.raises(ValueError):
            ablation_config(bad)


def test_contrastive_always_required():
    with pytest.raises(ValueError):
        TrainRunConfig(enabled_losses=frozenset({"od"}))


def test_pretrain_improves_train_accuracy(tiny_corpus, tiny_model_config):
    m = tiny_corpus["manifests"]["train"]
    _, _, history = pretrain_sketch_classifier(m, tiny_model_config, epochs=4,
                                               seed=0)
    assert len(history) == 4
    assert history[-1]["train_accuracy"] > history[0]["train_accuracy"] - 0.05
    assert history[-1]["loss"] < history[0]["loss"]


def test_pretrain_zero_epochs_is_seeded_init(tiny_corpus, tiny_model_config):
    from cstbir.model.transformer import VisionEncoder

    m = tiny_corpus["manifests"]["train"]
    enc, head, history = pretrain_sketch_classifier(m, tiny_model_config,
                                                    epochs=0, seed=9)
    assert history == []
    c = tiny_model_config
    torch.manual_seed(9)
    ref = VisionEncoder(c.embed_dim, c.vision_layers, c.heads, c.patch_size,
                        c.image_size, in_channels=1)
    for name, tensor in enc.state_dict().items():
        assert torch.equal(tensor, ref.state_dict()[name]), name


def test_pretrain_rejects_degenerate_manifest(tiny_corpus, tiny_model_config):
    from dataclasses import replace

    m = tiny_corpus["manifests"]["train"]
    cat = m.entries[0].category
    solo = replace(m, entries=[q for q in m.entries if q.category == cat])
    with pytest.raises(TrainingError):
        pretrain_sketch_classifier(solo, tiny_model_config, epochs=1)


def test_init_sketch_branch_copies_weights(tiny_corpus, tiny_model_config):
    m = tiny_corpus["manifests"]["train"]
    enc, _, _ = pretrain_sketch_classifier(m, tiny_model_config, epochs=1,
                                           seed=2)
    torch.manual_seed(0)
    model = STNet(tiny_model_config)
    init_sketch_branch(model, enc)
    for name, tensor in enc.state_dict().items():
        assert torch.equal(tensor, model.sketch_encoder.state_dict()[name]), name
