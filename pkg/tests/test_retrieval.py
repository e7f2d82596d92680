import numpy as np
import pytest
import torch

from cstbir.data.sampling import load_sketch
from cstbir.retrieval.index import GalleryIndex, IndexError_, build_index
from cstbir.retrieval.metrics import median_rank, recall_at_k
from cstbir.retrieval.search import (SearchError, evaluate, rank_order,
                                     score_gallery, search)


class TestMetrics:
    def test_recall_hand_computed(self):
        ranks = [1, 2, 3, 11]
        assert recall_at_k(ranks, 10) == pytest.approx(75.0)
        assert recall_at_k(ranks, 1) == pytest.approx(25.0)
        assert recall_at_k(ranks, 100) == pytest.approx(100.0)

    def test_recall_rejects_bad_input(self):
        with pytest.raises(ValueError):
            recall_at_k([], 10)
        with pytest.raises(ValueError):
            recall_at_k([0, 1], 10)

    def test_median_even_averages_middle(self):
        assert median_rank([20, 21]) == pytest.approx(20.5)
        assert median_rank([1, 2, 3, 100]) == pytest.approx(2.5)

    def test_median_odd(self):
        assert median_rank([7, 1, 3]) == pytest.approx(3.0)

    def test_random_ranking_monte_carlo(self):
        # uniform ranks in a 64-image gallery: E[R@5] = 5/64 ~ 7.8%
        rng = np.random.default_rng(0)
        ranks = rng.integers(1, 65, size=5000)
        assert recall_at_k(ranks, 5) == pytest.approx(100 * 5 / 64, abs=1.5)
        assert median_rank(ranks) == pytest.approx(32.5, abs=2.0)

    def test_metrics_on_large_permutations(self):
        # 1000 shuffled rank lists: recall equals a direct count oracle
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(3, 40))
            ranks = list(rng.permutation(n) + 1)
            k = int(rng.integers(1, n + 1))
            assert recall_at_k(ranks, k) == pytest.approx(100.0 * k / n)


class TestIndex:
    def test_build_sorted_unit_norm(self, tiny_index, tiny_corpus):
        gallery = tiny_corpus["manifests"]["test1k"]
        assert tiny_index.image_ids == sorted(gallery.images)
        norms = np.linalg.norm(tiny_index.embeddings, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-5)
        assert tiny_index.tokens.shape[0] == len(tiny_index)
        assert tiny_index.tokens.shape[2] == tiny_index.dim

    def test_full_tokens_pool_to_embeddings(self, tiny_index):
        pooled = tiny_index.tokens[:, 1:, :].mean(axis=1)
        pooled /= np.linalg.norm(pooled, axis=1, keepdims=True)
        assert np.allclose(pooled, tiny_index.embeddings, atol=1e-5)

    def test_save_load_round_trip(self, tiny_index, tmp_path):
        p = tmp_path / "g.idx"
        tiny_index.save(p)
        back = GalleryIndex.load(p)
        assert back.image_ids == tiny_index.image_ids
        assert back.layout == "full"
        assert back.model_fingerprint == "fp-test"
        assert np.array_equal(back.embeddings, tiny_index.embeddings)
        assert np.array_equal(back.tokens, tiny_index.tokens)

    def test_save_is_deterministic(self, tiny_index, tmp_path):
        a, b = tmp_path / "a.idx", tmp_path / "b.idx"
        tiny_index.save(a)
        tiny_index.save(b)
        assert a.read_bytes() == b.read_bytes()

    def test_corrupt_file_detected(self, tiny_index, tmp_path):
        p = tmp_path / "g.idx"
        tiny_index.save(p)
        blob = bytearray(p.read_bytes())
        blob[len(blob) // 2] ^= 0xFF
        p.write_bytes(bytes(blob))
        with pytest.raises(IndexError_):
            GalleryIndex.load(p)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "junk.idx"
        p.write_bytes(b"JUNK" + b"\x00" * 100)
        with pytest.raises(IndexError_):
            GalleryIndex.load(p)

    def test_static_layout_has_no_tokens(self, tiny_corpus, tiny_run, tmp_path):
        idx = build_index(tiny_corpus["manifests"]["test1k"], tiny_run["model"],
                          layout="static")
        assert idx.tokens is None
        p = tmp_path / "s.idx"
        idx.save(p)
        assert GalleryIndex.load(p).tokens is None

    def test_duplicate_ids_rejected(self):
        e = np.ones((2, 4), dtype=np.float32) / 2.0
        with pytest.raises(IndexError_):
            GalleryIndex(["a", "a"], e, None, "", layout="static")

    def test_non_unit_rows_rejected(self):
        e = np.ones((2, 4), dtype=np.float32)
        with pytest.raises(IndexError_):
            GalleryIndex(["a", "b"], e, None, "", layout="static")


def unit_rows(a):
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


class TestSearch:
    def test_text_only_matches_brute_force(self, tiny_index, tiny_run,
                                           tiny_tokenizer):
        model = tiny_run["model"]
        text = "red, near the top left"
        scores = score_gallery(tiny_index, model, tiny_tokenizer, text=text,
                               mode="text_only")
        ids = torch.tensor([tiny_tokenizer.tokenize(text)])
        with torch.no_grad():
            h, _ = model.encode_text(ids)
        h = unit_rows(h.numpy())[0]
        expected = tiny_index.embeddings @ h
        assert np.allclose(scores, expected, atol=1e-6)

    def test_stnet_matches_direct_attention_oracle(self, tiny_index, tiny_run,
                                                   tiny_tokenizer, tiny_corpus):
        model = tiny_run["model"]
        m = tiny_corpus["manifests"]["val"]
        q = m.entries[0]
        sketch = load_sketch(m, q)
        scores = score_gallery(tiny_index, model, tiny_tokenizer, text=q.text,
                               sketch=sketch, mode="stnet")

        with torch.no_grad():
            hs, _ = model.encode_sketch(model.prepare_sketches(sketch[None]))
            ht, _ = model.encode_text(
                torch.tensor([tiny_tokenizer.tokenize(q.text)]))
        hs = hs[0].double().numpy()
        ht = unit_rows(ht.double().numpy())[0]
        expected = []
        for tokens in tiny_index.tokens.astype(np.float64):
            logits = tokens @ hs
            a = np.exp(logits - logits.max())
            a /= a.sum()
            pooled = (a[:, None] * tokens)[1:].mean(axis=0)
            expected.append(pooled / np.linalg.norm(pooled) @ ht)
        assert np.allclose(scores, expected, atol=1e-4)

    def test_tie_break_by_ascending_id(self):
        e = unit_rows(np.ones((3, 4))).astype(np.float32)
        idx = GalleryIndex(["img_c", "img_a", "img_b"], e, None, "",
                           layout="static")
        order = rank_order(idx, np.array([0.5, 0.5, 0.5]))
        assert [idx.image_ids[i] for i in order] == ["img_a", "img_b", "img_c"]

    def test_k_exceeds_gallery_rejected(self, tiny_index, tiny_run,
                                        tiny_tokenizer):
        with pytest.raises(SearchError):
            search(tiny_index, tiny_run["model"], tiny_tokenizer, text="red",
                   k=len(tiny_index) + 1, mode="text_only")

    def test_absent_target_rejected(self, tiny_index, tiny_run, tiny_tokenizer):
        with pytest.raises(SearchError):
            search(tiny_index, tiny_run["model"], tiny_tokenizer, text="red",
                   target_image_id="nope", k=1, mode="text_only")

    def test_missing_inputs_per_mode(self, tiny_index, tiny_run, tiny_tokenizer):
        model = tiny_run["model"]
        with pytest.raises(SearchError):
            search(tiny_index, model, tiny_tokenizer, sketch=None, text=None,
                   k=1, mode="text_only")
        with pytest.raises(SearchError):
            search(tiny_index, model, tiny_tokenizer, text="red", k=1,
                   mode="stnet")
        with pytest.raises(SearchError):
            score_gallery(tiny_index, model, tiny_tokenizer, text="red",
                          mode="bogus")

    def test_stnet_needs_full_layout(self, tiny_corpus, tiny_run,
                                     tiny_tokenizer):
        m = tiny_corpus["manifests"]["test1k"]
        static = build_index(m, tiny_run["model"], layout="static")
        sketch = load_sketch(m, m.entries[0])
        with pytest.raises(SearchError):
            score_gallery(static, tiny_run["model"], tiny_tokenizer,
                          text="red", sketch=sketch, mode="stnet")

    def test_gt_rank_consistent_with_order(self, tiny_index, tiny_run,
                                           tiny_tokenizer, tiny_corpus):
        m = tiny_corpus["manifests"]["test1k"]
        q = m.entries[0]
        res = search(tiny_index, tiny_run["model"], tiny_tokenizer, text=q.text,
                     target_image_id=q.target_image_id, k=len(tiny_index),
                     mode="text_only")
        ids = [iid for iid, _ in res.results]
        assert ids[res.gt_rank - 1] == q.target_image_id
        scores = [s for _, s in res.results]
        assert scores == sorted(scores, reverse=True)


class TestEvaluate:
    def test_report_and_csv(self, tiny_index, tiny_run, tiny_tokenizer,
                            tiny_corpus, tmp_path):
        m = tiny_corpus["manifests"]["test1k"]
        report = evaluate(tiny_index, tiny_run["model"], tiny_tokenizer, m,
                          k_list=[1, 5, 10], mode="stnet", out_dir=tmp_path)
        assert report.n_queries == len(m.entries)
        assert set(report.recall_at) == {1, 5, 10}
        assert 0 <= report.recall_at[1] <= report.recall_at[5] \
            <= report.recall_at[10] <= 100
        assert 1 <= report.median_rank <= len(tiny_index)
        lines = (tmp_path / "per_query_ranks.csv").read_text().splitlines()
        assert lines[0] == "query_id,target_image_id,gt_rank"
        assert len(lines) == 1 + len(m.entries)

    def test_perfect_index_oracle(self, tiny_tokenizer, tiny_run, tiny_corpus):
        # replace embeddings so each query's text embedding is its target row:
        # every rank must be 1 and recall@1 100%
        model = tiny_run["model"]
        m = tiny_corpus["manifests"]["test1k"]
        ids = sorted(m.images)
        by_target = {q.target_image_id: q for q in m.entries}
        rows = []
        for iid in ids:
            q = by_target[iid]
            with torch.no_grad():
                h, _ = model.encode_text(
                    torch.tensor([tiny_tokenizer.tokenize(q.text)]))
            rows.append(unit_rows(h.numpy())[0])
        idx = GalleryIndex(ids, np.stack(rows).astype(np.float32), None, "",
                           layout="static")
        report = evaluate(idx, model, tiny_tokenizer, m, k_list=[1],
                          mode="text_only")
        assert report.recall_at[1] == pytest.approx(100.0)
        assert report.median_rank == pytest.approx(1.0)
