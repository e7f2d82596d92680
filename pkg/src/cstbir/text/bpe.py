"""Byte-pair-encoding tokenizer trained on the corpus texts."""
from __future__ import annotations

from collections import Counter
from pathlib import Path

PAD, CLS, UNK = 0, 1, 2
SPECIALS = {"<pad>": PAD, "<cls>": CLS, "<unk>": UNK}
EOW = "</w>"


def _normalize(text: str) -> list:
    return text.lower().split()


class BPETokenizer:
    """Word-internal BPE over a fixed learned vocabulary.

    Ids are padded/truncated to `max_text_len` with a leading CLS slot.
    """

    def __init__(self, vocab: dict, merges: list, max_text_len: int = 16):
        self.vocab = dict(vocab)
        self.merges = list(merges)
        self.ranks = {tuple(m): i for i, m in enumerate(merges)}
        self.max_text_len = max_text_len
        self.inv_vocab = {i: t for t, i in self.vocab.items()}
        self._word_cache: dict = {}

    # ---------------------------------------------------------- training
    @classmethod
    def train(cls, texts, vocab_size: int = 2000, max_text_len: int = 16) -> "BPETokenizer":
        word_freq = Counter()
        for t in texts:
            word_freq.update(_normalize(t))

        symbols = {}
        for w, f in word_freq.items():
            symbols[w] = (tuple(w) + (EOW,), f)

        vocab = dict(SPECIALS)
        chars = sorted({c for seq, _ in symbols.values() for c in seq})
        for c in chars:
            vocab[c] = len(vocab)

        merges = []
        while len(vocab) < vocab_size:
            pairs = Counter()
            for seq, f in symbols.values():
                for a, b in zip(seq[:-1], seq[1:]):
                    pairs[(a, b)] += f
            if not pairs:
                break
            # deterministic: highest count, then lexicographically first
            best = min(pairs.items(), key=lambda kv: (-kv[1], kv[0]))[0]
            merged = best[0] + best[1]
            if merged in vocab:
                break
            vocab[merged] = len(vocab)
            merges.append(list(best))
            symbols = {w: (cls._apply_pair(seq, best), f)
                       for w, (seq, f) in symbols.items()}
        return cls(vocab, merges, max_text_len=max_text_len)

    @staticmethod
    def _apply_pair(seq, pair):
        out = []
        i = 0
        while i < len(seq):
            if i + 1 < len(seq) and (seq[i], seq[i + 1]) == pair:
                out.append(seq[i] + seq[i + 1])
                i += 2
            else:
                out.append(seq[i])
                i += 1
        return tuple(out)

    # ---------------------------------------------------------- encoding
    def _encode_word(self, word: str) -> list:
        if word in self._word_cache:
            return self._word_cache[word]
        seq = tuple(word) + (EOW,)
        while len(seq) > 1:
            candidates = [(self.ranks.get((a, b)), (a, b))
                          for a, b in zip(seq[:-1], seq[1:])]
            candidates = [c for c in candidates if c[0] is not None]
            if not candidates:
                break
            _, pair = min(candidates)
            seq = self._apply_pair(seq, pair)
        ids = [self.vocab.get(tok, UNK) for tok in seq]
        self._word_cache[word] = ids
        return ids

    def content_ids(self, text: str) -> list:
        """Subword ids without CLS/PAD framing or truncation."""
        ids = []
        for w in _normalize(text):
            ids.extend(self._encode_word(w))
        return ids

    def count_tokens(self, text: str) -> int:
        return len(self.content_ids(text))

    def tokenize(self, text: str) -> list:
        ids = [CLS] + self.content_ids(text)
        ids = ids[: self.max_text_len]
        ids.extend([PAD] * (self.max_text_len - len(ids)))
        return ids

    def detokenize(self, ids) -> str:
        toks = []
        for i in ids:
            if i in (PAD, CLS):
                continue
            toks.append(self.inv_vocab.get(int(i), ""))
        return "".join(toks).replace(EOW, " ").strip()

    # --------------------------------------------------------------- io
    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#max_text_len\t{self.max_text_len}\n")
            for tok, i in sorted(self.vocab.items(), key=lambda kv: kv[1]):
                fh.write(f"{tok}\t{i}\n")
            fh.write("#merges\n")
            for a, b in self.merges:
                fh.write(f"{a} {b}\n")

    @classmethod
    def load(cls, path: str | Path) -> "BPETokenizer":
        vocab, merges = {}, []
        max_text_len = 16
        section = "vocab"
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#max_text_len"):
                    max_text_len = int(line.split("\t")[1])
                    continue
                if line == "#merges":
                    section = "merges"
                    continue
                if section == "vocab":
                    tok, i = line.split("\t")
                    vocab[tok] = int(i)
                else:
                    a, b = line.split(" ")
                    merges.append([a, b])
        return cls(vocab, merges, max_text_len=max_text_len)
