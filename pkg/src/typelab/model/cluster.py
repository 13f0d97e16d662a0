"""Type cluster: encoded training samples queried by nearest neighbours."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TypeCluster", "build_type_cluster", "predict", "predict_batch", "KNN_K"]

KNN_K = 10

# inverse-distance vote weight; the epsilon keeps exact hits finite
_VOTE_EPS = 1e-8


@dataclass
class TypeCluster:
    vectors: np.ndarray  # (N, D) float64
    labels: list[str]
    k: int = KNN_K

    def __post_init__(self):
        if self.vectors.shape[0] != len(self.labels):
            raise ValueError("vector count must match label count")
        if self.k < 1:
            raise ValueError("k must be positive")

    @property
    def label_set(self) -> set[str]:
        return set(self.labels)


def build_type_cluster(encoder, train_batch, k: int = KNN_K) -> TypeCluster:
    """Encode the training samples into the searchable metric space."""
    vectors = encoder.encode_eval(train_batch)
    return TypeCluster(vectors=vectors, labels=list(train_batch.labels), k=k)


def predict(query: np.ndarray, cluster: TypeCluster, k: int | None = None) -> list[tuple[str, float]]:
    """Rank training labels for one encoded query.

    Euclidean k-nearest neighbours vote with inverse-distance weights
    accumulated per label; ties in the final score break lexicographically.
    Every returned label occurred in the training split.
    """
    if cluster.vectors.shape[0] == 0:
        raise ValueError("empty type cluster")
    k = cluster.k if k is None else k
    dists = np.sqrt(((cluster.vectors - query) ** 2).sum(axis=1))
    # neighbour order: distance, then row index (deterministic on ties)
    order = np.lexsort((np.arange(len(dists)), dists))[:k]
    scores: dict[str, float] = {}
    for idx in order:
        label = cluster.labels[idx]
        scores[label] = scores.get(label, 0.0) + 1.0 / (dists[idx] + _VOTE_EPS)
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


def predict_batch(encoder, batch, cluster: TypeCluster, k: int | None = None) -> list[str]:
    """Top-1 predictions for a batch of samples."""
    queries = encoder.encode_eval(batch)
    return [predict(q, cluster, k)[0][0] for q in queries]
