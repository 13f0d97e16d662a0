"""Prediction units and their input features.

Every annotated slot (parameter, return, variable) in a module record
becomes one sample with three features: the subtokenized declared name,
the concatenated usage-window context, and a binary vector marking which
of the most frequent training types appear in the sample's source file.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import torch

from ..extract import ModuleRecord
from ..normalize import TypeParseError, normalize_annotation

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
    "VISIBLE_INDEX_SIZE",
    "IDENT_LEN",
    "CTX_LEN",
    "PAD_ID",
    "UNK_ID",
]

# only the most frequent training types feed the visible-hint vector
VISIBLE_INDEX_SIZE = 1024

IDENT_LEN = 16
CTX_LEN = 64

PAD_ID = 0
UNK_ID = 1

_CAMEL_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z0-9]*|[a-z0-9]+")
_CODE_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+|[^\sA-Za-z0-9_]")


def sub_tokenize(name: str) -> list[str]:
    """Split a declared name on snake_case / camelCase boundaries, lowercased."""
    parts = []
    for chunk in name.split("_"):
        parts.extend(m.group(0).lower() for m in _CAMEL_RE.finditer(chunk))
    return parts


_IDENT_LIKE_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def model_tokens(tokens: Sequence[str]) -> list[str]:
    """Map raw code tokens into the model token space.

    Identifiers are subtokenized and lowercased; operators and literal
    placeholders pass through. Both the embedding corpus and the sample
    contexts go through this, so lookups share one vocabulary.
    """
    out: list[str] = []
    for t in tokens:
        if _IDENT_LIKE_RE.match(t):
            out.extend(sub_tokenize(t))
        else:
            out.append(t)
    return out


@dataclass
class TypeSample:
    identifier_tokens: list[str]
    context_tokens: list[str]
    label: str
    domain_tag: str = ""
    project_id: str = ""
    kind: str = ""  # param | return | variable
    file_types: frozenset[str] = frozenset()
    visible_hints: np.ndarray | None = None


@dataclass(frozen=True)
class VisibleTypeIndex:
    """Most frequent training-split types, ordered by descending frequency."""

    types: tuple[str, ...]

    def __post_init__(self):
        if len(self.types) > VISIBLE_INDEX_SIZE:
            raise ValueError(f"index longer than {VISIBLE_INDEX_SIZE}")

    def __len__(self) -> int:
        return len(self.types)


def build_visible_type_index(
    train_samples: Sequence[TypeSample],
    max_size: int = VISIBLE_INDEX_SIZE,
) -> VisibleTypeIndex:
    """Rank training labels by frequency. Pass training-split samples only;
    test-split types must never influence the index."""
    counts = Counter(s.label for s in train_samples)
    ranked = sorted(counts, key=lambda t: (-counts[t], t))
    return VisibleTypeIndex(tuple(ranked[:max_size]))


def build_visible_hints(module_types: set[str], index: VisibleTypeIndex) -> np.ndarray:
    """Binary vector: bit i set iff index type i appears in the module."""
    return np.array(
        [1.0 if t in module_types else 0.0 for t in index.types], dtype=np.float32
    )


def attach_hints(samples: Iterable[TypeSample], index: VisibleTypeIndex) -> None:
    cache: dict[frozenset[str], np.ndarray] = {}
    for s in samples:
        if s.file_types not in cache:
            cache[s.file_types] = build_visible_hints(set(s.file_types), index)
        s.visible_hints = cache[s.file_types]


# ---------------------------------------------------------------------------
# sample construction
# ---------------------------------------------------------------------------

def _code_tokens(text: str) -> list[str]:
    return _CODE_TOKEN_RE.findall(text)


def _occurrence_windows(tokens: Sequence[str], name: str, window: int = 7) -> list[str]:
    half = window // 2
    out: list[str] = []
    for i, tok in enumerate(tokens):
        if tok == name:
            out.extend(tokens[max(0, i - half) : i + half + 1])
    return out


def samples_from_records(
    records: Sequence[ModuleRecord],
    alias_table: Mapping[str, str],
    qualify_table: Mapping[str, str],
    domain_tag: str = "",
    stats: dict | None = None,
) -> list[TypeSample]:
    """Turn annotated slots into samples with canonical labels.

    Slots whose annotation fails to parse or normalizes to a dropped label
    are skipped and counted in ``stats`` by reason.
    """
    if stats is None:
        stats = {}
    stats.setdefault("parse_error", 0)
    stats.setdefault("dropped_label", 0)
    stats.setdefault("emitted", 0)

    samples: list[TypeSample] = []
    for record in records:
        module_name = record.module_name()
        imports = record.imports

        def canonical(annotation: str) -> str | None:
            if not annotation.strip():
                return None
            try:
                label = normalize_annotation(
                    annotation, alias_table, qualify_table, imports, module_name
                )
            except TypeParseError:
                stats["parse_error"] += 1
                return None
            if label is None:
                stats["dropped_label"] += 1
            return label

        slots: list[tuple[str, str, list[str], str]] = []  # name, label, ctx, kind

        for owner, func in record.all_funcs():
            for pname, ann in func.params.items():
                if not ann:
                    continue
                label = canonical(ann)
                if label is None:
                    continue
                ctx = [t for w in func.params_occur.get(pname, []) for t in w]
                slots.append((pname, label, model_tokens(ctx), "param"))
            if func.ret_type:
                label = canonical(func.ret_type)
                if label is not None:
                    ctx = [t for expr in func.ret_exprs for t in _code_tokens(expr)]
                    slots.append((func.name, label, model_tokens(ctx), "return"))
            for vname, ann in func.variables.items():
                label = canonical(ann)
                if label is None:
                    continue
                leaf = vname.split(".")[-1]
                ctx = _occurrence_windows(record.untyped_seq, leaf)
                slots.append((leaf, label, model_tokens(ctx), "variable"))

        for scope in (record.variables, *[c.variables for c in record.classes]):
            for vname, ann in scope.items():
                label = canonical(ann)
                if label is None:
                    continue
                ctx = _occurrence_windows(record.untyped_seq, vname)
                slots.append((vname, label, model_tokens(ctx), "variable"))

        file_types = frozenset(label for _, label, _, _ in slots)
        for name, label, ctx, kind in slots:
            stats["emitted"] += 1
            samples.append(
                TypeSample(
                    identifier_tokens=sub_tokenize(name),
                    context_tokens=ctx,
                    label=label,
                    domain_tag=domain_tag,
                    project_id=record.project_id,
                    kind=kind,
                    file_types=file_types,
                )
            )
    return samples


# ---------------------------------------------------------------------------
# vectorization
# ---------------------------------------------------------------------------

@dataclass
class SampleTensors:
    """Fixed-length id tensors for a batch of samples."""

    ident_ids: torch.Tensor  # (N, IDENT_LEN) int64
    ident_len: torch.Tensor  # (N,) int64
    ctx_ids: torch.Tensor  # (N, CTX_LEN) int64
    ctx_len: torch.Tensor  # (N,) int64
    hints: torch.Tensor  # (N, hint_dim) float32
    labels: list[str] = field(default_factory=list)
    domains: list[str] = field(default_factory=list)
    projects: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.ident_ids.shape[0]

    def take(self, idx: np.ndarray) -> "SampleTensors":
        t = torch.as_tensor(idx, dtype=torch.int64)
        return SampleTensors(
            ident_ids=self.ident_ids[t],
            ident_len=self.ident_len[t],
            ctx_ids=self.ctx_ids[t],
            ctx_len=self.ctx_len[t],
            hints=self.hints[t],
            labels=[self.labels[i] for i in idx],
            domains=[self.domains[i] for i in idx],
            projects=[self.projects[i] for i in idx],
        )


def _encode_tokens(tokens: Sequence[str], vocab: Mapping[str, int], length: int) -> tuple[list[int], int]:
    ids = [(vocab[t] + 2) if t in vocab else UNK_ID for t in tokens[:length]]
    n = len(ids)
    ids.extend([PAD_ID] * (length - n))
    return ids, n


def vectorize(
    samples: Sequence[TypeSample],
    vocab: Mapping[str, int],
    ident_len: int = IDENT_LEN,
    ctx_len: int = CTX_LEN,
) -> SampleTensors:
    """Map token sequences to padded id arrays (PAD=0, UNK=1, vocab at 2+).

    Samples must already carry visible-hint vectors of equal dimension.
    """
    n = len(samples)
    hint_dim = len(samples[0].visible_hints) if n else 0
    ident_ids = np.zeros((n, ident_len), dtype=np.int64)
    ident_n = np.zeros(n, dtype=np.int64)
    ctx_ids = np.zeros((n, ctx_len), dtype=np.int64)
    ctx_n = np.zeros(n, dtype=np.int64)
    hints = np.zeros((n, hint_dim), dtype=np.float32)
    for i, s in enumerate(samples):
        if s.visible_hints is None:
            raise ValueError("attach_hints must run before vectorize")
        row, ln = _encode_tokens(s.identifier_tokens, vocab, ident_len)
        ident_ids[i], ident_n[i] = row, ln
        row, ln = _encode_tokens(s.context_tokens, vocab, ctx_len)
        ctx_ids[i], ctx_n[i] = row, ln
        hints[i] = s.visible_hints
    return SampleTensors(
        ident_ids=torch.from_numpy(ident_ids),
        ident_len=torch.from_numpy(ident_n),
        ctx_ids=torch.from_numpy(ctx_ids),
        ctx_len=torch.from_numpy(ctx_n),
        hints=torch.from_numpy(hints),
        labels=[s.label for s in samples],
        domains=[s.domain_tag for s in samples],
        projects=[s.project_id for s in samples],
    )
