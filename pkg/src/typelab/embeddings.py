"""Static token embeddings and out-of-vocabulary accounting.

A small skip-gram-with-negative-sampling trainer over code token
sequences. Only tokens seen at least ``min_count`` times enter the
vocabulary; everything else is out-of-vocabulary at lookup time and its
information is lost. Training is single-worker and fully seeded.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "EmbeddingModel",
    "OovReport",
    "train_embedding",
    "embed_or_oov",
    "oov_report",
    "save_embedding",
    "load_embedding",
    "write_oov_reports",
    "EMBED_DIM",
    "WINDOW",
    "MIN_COUNT",
]

EMBED_DIM = 100
WINDOW = 5
MIN_COUNT = 3


@dataclass
class EmbeddingModel:
    vocab: dict[str, int]
    dim: int
    vectors: np.ndarray  # (len(vocab), dim)
    min_count: int = MIN_COUNT
    train_corpus_id: str = ""

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.vocab[token]]


@dataclass
class OovReport:
    corpus_id: str
    total_tokens: int
    oov_tokens: int

    @property
    def oov_rate(self) -> float:
        if self.total_tokens == 0:
            return 0.0
        return self.oov_tokens / self.total_tokens


def _sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-x))


def train_embedding(
    token_sequences: Sequence[Sequence[str]],
    dim: int = EMBED_DIM,
    window: int = WINDOW,
    min_count: int = MIN_COUNT,
    seed: int = 0,
    epochs: int = 3,
    negative: int = 5,
    lr: float = 0.05,
    corpus_id: str = "",
) -> EmbeddingModel:
    """Train a skip-gram embedding on the given token sequences.

    Deterministic for a fixed seed (single worker, fixed iteration order).
    Raises ValueError on an empty corpus.
    """
    counts: dict[str, int] = {}
    total = 0
    for seq in token_sequences:
        for tok in seq:
            counts[tok] = counts.get(tok, 0) + 1
            total += 1
    if total == 0:
        raise ValueError("empty training corpus")

    kept = sorted(
        ((t, c) for t, c in counts.items() if c >= min_count),
        key=lambda tc: (-tc[1], tc[0]),
    )
    vocab = {t: i for i, (t, c) in enumerate(kept)}
    n_vocab = len(vocab)
    rng = np.random.default_rng(seed)

    if n_vocab == 0:
        return EmbeddingModel(vocab, dim, np.zeros((0, dim)), min_count, corpus_id)

    w_in = (rng.random((n_vocab, dim)) - 0.5) / dim
    w_out = np.zeros((n_vocab, dim))

    freq = np.array([c for _, c in kept], dtype=np.float64) ** 0.75
    noise = freq / freq.sum()

    encoded = [
        np.array([vocab[t] for t in seq if t in vocab], dtype=np.int64)
        for seq in token_sequences
    ]
    encoded = [e for e in encoded if len(e) > 1]

    for _ in range(epochs):
        for seq in encoded:
            n = len(seq)
            for i in range(n):
                center = seq[i]
                lo = max(0, i - window)
                hi = min(n, i + window + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    ctx = seq[j]
                    negs = rng.choice(n_vocab, size=negative, p=noise)
                    ids = np.concatenate(([ctx], negs))
                    labels = np.zeros(len(ids))
                    labels[0] = 1.0
                    v = w_in[center]
                    z = w_out[ids] @ v
                    g = (_sigmoid(z) - labels) * lr
                    grad_in = g @ w_out[ids]
                    w_out[ids] -= np.outer(g, v)
                    w_in[center] -= grad_in

    return EmbeddingModel(vocab, dim, w_in, min_count, corpus_id)


def embed_or_oov(model: EmbeddingModel, token: str) -> np.ndarray | None:
    """Exact-match lookup; None marks out-of-vocabulary (never fabricated)."""
    idx = model.vocab.get(token)
    if idx is None:
        return None
    return model.vectors[idx]


def oov_report(
    model: EmbeddingModel,
    corpus: Iterable[Sequence[str]],
    corpus_id: str = "",
    count_distinct: bool = False,
) -> OovReport:
    """Count token occurrences outside the vocabulary.

    The rate counts occurrences by default; ``count_distinct`` switches to
    distinct word types instead.
    """
    if count_distinct:
        seen: set[str] = set()
        for seq in corpus:
            seen.update(seq)
        total = len(seen)
        oov = sum(1 for t in seen if t not in model.vocab)
    else:
        total = 0
        oov = 0
        for seq in corpus:
            for tok in seq:
                total += 1
                if tok not in model.vocab:
                    oov += 1
    return OovReport(corpus_id=corpus_id, total_tokens=total, oov_tokens=oov)


# ---------------------------------------------------------------------------
# persistence: flat binary table + plain-text vocab
# ---------------------------------------------------------------------------

def save_embedding(model: EmbeddingModel, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.save(directory / "vectors.npy", model.vectors)
    ordered = sorted(model.vocab, key=model.vocab.get)
    (directory / "vocab.txt").write_text("\n".join(ordered) + "\n" if ordered else "", encoding="utf-8")
    (directory / "meta.json").write_text(
        json.dumps(
            {
                "dim": model.dim,
                "min_count": model.min_count,
                "train_corpus_id": model.train_corpus_id,
            }
        ),
        encoding="utf-8",
    )


def load_embedding(directory: str | Path) -> EmbeddingModel:
    directory = Path(directory)
    vectors = np.load(directory / "vectors.npy")
    text = (directory / "vocab.txt").read_text(encoding="utf-8")
    tokens = [t for t in text.splitlines() if t]
    meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
    return EmbeddingModel(
        vocab={t: i for i, t in enumerate(tokens)},
        dim=int(meta["dim"]),
        vectors=vectors,
        min_count=int(meta["min_count"]),
        train_corpus_id=meta["train_corpus_id"],
    )


def write_oov_reports(reports: Sequence[OovReport], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["corpus_id", "total_tokens", "oov_tokens", "oov_rate"])
        for r in reports:
            writer.writerow([r.corpus_id, r.total_tokens, r.oov_tokens, f"{r.oov_rate:.6f}"])
