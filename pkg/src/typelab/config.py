"""Declarative experiment configuration.

One config file drives the whole pipeline; its content hash names every
table and figure the run produces.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from importlib import resources
from pathlib import Path

import yaml

from .fixtures import FixtureSpec

__all__ = ["ExperimentConfig", "load_config", "default_config_path", "config_hash"]

ADAPTATIONS = ("dann", "wdgrl", "finetune")
REGIMES = ("source", "both", "all")


@dataclass
class ExperimentConfig:
    name: str = "web2cal-fixture"
    source_domain: str = "web"
    target_domain: str = "cal"
    seeds: tuple[int, ...] = (11, 22, 33)
    embedding_regime: str = "both"
    adaptations: tuple[str, ...] = ADAPTATIONS
    common_threshold: int = 100

    fixture: FixtureSpec = field(default_factory=FixtureSpec)
    fixture_seed: int = 7

    dedup_threshold: float = 0.95
    dedup_k: int = 10
    dedup_seed: int = 5

    split_seed: int = 13

    embed_dim: int = 48
    embed_window: int = 5
    embed_min_count: int = 3
    embed_epochs: int = 2
    embed_seed: int = 3

    ident_hidden: int = 48
    ctx_hidden: int = 48
    dense_dim: int = 64
    margin: float = 2.0
    ident_len: int = 16
    ctx_len: int = 64
    visible_index_size: int = 1024
    knn_k: int = 10
    epochs: int = 10
    learning_rate: float = 0.01
    batch_size: int = 96

    wdgrl_penalty_weight: float = 1.0
    wdgrl_critic_steps: int = 5

    probe_seed: int = 17
    probe_max_per_side: int = 600

    def __post_init__(self):
        if self.source_domain == self.target_domain:
            raise ValueError("source and target domain must differ for a cross-domain setup")
        if self.embedding_regime not in REGIMES:
            raise ValueError(f"embedding_regime must be one of {REGIMES}")
        for a in self.adaptations:
            if a not in ADAPTATIONS:
                raise ValueError(f"unknown adaptation {a!r}")
        if len(self.seeds) < 2:
            raise ValueError("need at least 2 seeds for significance tests")
        self.seeds = tuple(int(s) for s in self.seeds)
        self.adaptations = tuple(self.adaptations)
        if isinstance(self.fixture, dict):
            self.fixture = FixtureSpec(**self.fixture)

    def to_dict(self) -> dict:
        return asdict(self)


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def default_config_path() -> Path:
    return Path(str(resources.files("typelab.data").joinpath("default_config.yaml")))


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    """Load a YAML config; missing keys fall back to the defaults."""
    if path is None:
        path = default_config_path()
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"config root must be a mapping, got {type(raw).__name__}")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "seeds" in raw:
        raw["seeds"] = tuple(raw["seeds"])
    if "adaptations" in raw:
        raw["adaptations"] = tuple(raw["adaptations"])
    return ExperimentConfig(**raw)
