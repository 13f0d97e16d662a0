"""Triplet training loop with seeded per-epoch mining."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import torch

from .encoder import TypeEncoder, triplet_loss
from .samples import SampleTensors

__all__ = ["train", "TrainHistory", "iterate_triplet_batches"]

EPOCHS = 30
LEARNING_RATE = 0.002
BATCH_SIZE = 2536


@dataclass
class TrainHistory:
    epoch_losses: list[float] = field(default_factory=list)


def _label_pools(labels: list[str]) -> dict[str, np.ndarray]:
    pools: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        pools.setdefault(lab, []).append(i)
    return {lab: np.array(idx, dtype=np.int64) for lab, idx in pools.items()}


def sample_triplets(
    labels: list[str], rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One epoch of (anchor, positive, negative) index triples.

    Anchors are a permutation of the train set; the positive is uniform from
    the anchor's label pool (excluding the anchor when possible), the
    negative uniform over the other labels.
    """
    n = len(labels)
    labels_arr = np.array(labels)
    pools = _label_pools(labels)
    if len(pools) < 2:
        raise ValueError("cannot form triplets from a single-label train set")

    anchors = rng.permutation(n)

    positives = np.empty(n, dtype=np.int64)
    for lab in sorted(pools):
        pool = pools[lab]
        at = np.nonzero(labels_arr[anchors] == lab)[0]
        picks = pool[rng.integers(len(pool), size=len(at))]
        if len(pool) > 1:
            clash = picks == anchors[at]
            while clash.any():
                picks[clash] = pool[rng.integers(len(pool), size=int(clash.sum()))]
                clash = picks == anchors[at]
        positives[at] = picks

    negatives = rng.integers(n, size=n)
    clash = labels_arr[negatives] == labels_arr[anchors]
    while clash.any():
        negatives[clash] = rng.integers(n, size=int(clash.sum()))
        clash = labels_arr[negatives] == labels_arr[anchors]
    return anchors, positives, negatives


def iterate_triplet_batches(
    data: SampleTensors, batch_size: int, seed: int, epoch: int
) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Seeded batch stream; reseeded per epoch so mining never repeats."""
    rng = np.random.default_rng([seed, epoch])
    anchors, positives, negatives = sample_triplets(data.labels, rng)
    for start in range(0, len(anchors), batch_size):
        sl = slice(start, start + batch_size)
        yield anchors[sl], positives[sl], negatives[sl]


def train(
    encoder: TypeEncoder,
    data: SampleTensors,
    epochs: int = EPOCHS,
    lr: float = LEARNING_RATE,
    batch_size: int = BATCH_SIZE,
    seed: int = 0,
    margin: float | None = None,
) -> TrainHistory:
    """Train the encoder in place; returns the per-epoch mean loss history."""
    if len(data) == 0:
        raise ValueError("empty train set")
    if len(set(data.labels)) < 2 and epochs > 0:
        raise ValueError("cannot form triplets from a single-label train set")
    margin = encoder.params.margin if margin is None else margin
    optimizer = torch.optim.Adam(encoder.parameters(), lr=lr)
    history = TrainHistory()

    encoder.train()
    for epoch in range(epochs):
        total = 0.0
        count = 0
        for a_idx, p_idx, n_idx in iterate_triplet_batches(data, batch_size, seed, epoch):
            t_a = encoder.encode_batch(data.take(a_idx))
            t_p = encoder.encode_batch(data.take(p_idx))
            t_n = encoder.encode_batch(data.take(n_idx))
            loss = triplet_loss(t_a, t_p, t_n, margin).mean()
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(a_idx)
            count += len(a_idx)
        history.epoch_losses.append(total / max(count, 1))
    return history
