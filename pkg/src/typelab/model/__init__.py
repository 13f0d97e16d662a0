"""Similarity-learning type predictor.

Samples pair a subtokenized identifier with its usage context and the
file's visible type hints; two recurrent encoders plus a dense head map
them into a metric space trained with a triplet loss, and prediction is a
nearest-neighbour vote over the encoded training samples.
"""

from .samples import (
    TypeSample,
    VisibleTypeIndex,
    build_visible_type_index,
    build_visible_hints,
    samples_from_records,
    sub_tokenize,
    model_tokens,
    attach_hints,
    vectorize,
    SampleTensors,
)
from .encoder import EncoderParams, TypeEncoder, triplet_loss
from .cluster import TypeCluster, build_type_cluster, predict, predict_batch
from .training import train, TrainHistory
from .adapt import GradientReversalLayer, dann_train, wdgrl_train, fine_tune
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "TypeSample",
    "VisibleTypeIndex",
    "build_visible_type_index",
    "build_visible_hints",
    "samples_from_records",
    "sub_tokenize",
    "model_tokens",
    "attach_hints",
    "vectorize",
    "SampleTensors",
    "EncoderParams",
    "TypeEncoder",
    "triplet_loss",
    "TypeCluster",
    "build_type_cluster",
    "predict",
    "predict_batch",
    "train",
    "TrainHistory",
    "GradientReversalLayer",
    "dann_train",
    "wdgrl_train",
    "fine_tune",
    "save_checkpoint",
    "load_checkpoint",
]
