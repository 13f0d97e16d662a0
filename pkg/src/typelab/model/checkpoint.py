"""Model checkpoint container.

One .npz archive holds the parameter table (state dict arrays under
``state/``), the encoder config as JSON, the visible-type index and the
type-cluster matrix with its labels.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .cluster import TypeCluster
from .encoder import EncoderParams, TypeEncoder
from .samples import VisibleTypeIndex

__all__ = ["save_checkpoint", "load_checkpoint"]


def save_checkpoint(
    path: str | Path,
    encoder: TypeEncoder,
    index: VisibleTypeIndex,
    cluster: TypeCluster,
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays: dict[str, np.ndarray] = {}
    for name, tensor in encoder.state_dict().items():
        arrays[f"state/{name}"] = tensor.detach().cpu().numpy()
    arrays["index"] = np.array(list(index.types), dtype=object)
    arrays["cluster_vectors"] = cluster.vectors
    arrays["cluster_labels"] = np.array(cluster.labels, dtype=object)
    arrays["cluster_k"] = np.array([cluster.k])
    arrays["config"] = np.array([json.dumps(encoder.params.to_dict())], dtype=object)
    np.savez_compressed(path, **arrays)


def load_checkpoint(path: str | Path) -> tuple[TypeEncoder, VisibleTypeIndex, TypeCluster]:
    with np.load(path, allow_pickle=True) as data:
        params = EncoderParams(**json.loads(str(data["config"][0])))
        state = {
            name.removeprefix("state/"): torch.from_numpy(data[name])
            for name in data.files
            if name.startswith("state/")
        }
        table = state["table"]
        encoder = TypeEncoder(
            params, np.zeros((table.shape[0] - 2, params.embed_dim)), seed=0
        )
        encoder.load_state_dict(state)
        index = VisibleTypeIndex(tuple(str(t) for t in data["index"]))
        cluster = TypeCluster(
            vectors=np.asarray(data["cluster_vectors"], dtype=np.float64),
            labels=[str(x) for x in data["cluster_labels"]],
            k=int(data["cluster_k"][0]),
        )
    return encoder, index, cluster
