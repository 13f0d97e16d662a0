"""Synthetic two-domain corpora for desk-scale experiments.

The real corpora need thousands of repositories; these generators emit
small parseable projects whose type distributions, shared-type fraction,
rare tail and identifier vocabulary are controllable, so the cross-domain
phenomena (prior shift, long tail, unpredictable types, OOV divergence,
covariate shift) are inducible at test scale.

Identifiers are built from a type-characteristic word plus a filler word:
the first carries the name-to-type signal a predictor can learn, the
second is drawn from domain vocabulary with probability shift_magnitude,
which injects the vocabulary divergence between domains.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

__all__ = [
    "FixtureSpec",
    "generate_fixture",
    "make_shifted_feature_fixture",
    "make_shifted_sample_fixture",
    "WEB_WORDS",
    "CAL_WORDS",
    "SHARED_WORDS",
]

WEB_WORDS = (
    "request", "response", "session", "route", "cookie", "token", "handler",
    "template", "form", "login", "endpoint", "header", "payload", "redirect",
    "status", "html", "query", "user", "page", "auth",
)
CAL_WORDS = (
    "matrix", "vector", "tensor", "gradient", "solver", "kernel", "mesh",
    "grid", "eigen", "norm", "coeff", "delta", "integral", "residual",
    "batch", "array", "scalar", "axis", "stride", "trace",
)
SHARED_WORDS = (
    "data", "value", "result", "count", "index", "item", "name", "size",
    "total", "config", "cache", "buffer", "flag", "offset", "limit",
    "entry", "node", "key", "level", "state",
)

# shared head types cycled deterministically, so equal shared fractions give
# identical label distributions across domains
_SHARED_TYPES = (
    "int", "str", "bool", "float", "List[int]", "Dict[str, str]",
    "Optional[str]", "List[str]",
)

_WEB_TYPES = (
    "bytes", "Dict[str, List[str]]", "Optional[bytes]", "Tuple[str, str]",
    "Set[str]", "Optional[int]", "Dict[str, int]", "List[bool]",
)
_CAL_TYPES = (
    "complex", "List[List[float]]", "Tuple[int, int]", "Set[int]",
    "List[float]", "Optional[float]", "Dict[int, float]", "Tuple[float, float]",
)

# name fragments that betray the annotation, the signal the encoders learn
_TYPE_WORDS = {
    "int": ("num", "counter", "step", "depth"),
    "str": ("text", "label", "title", "word"),
    "bool": ("is", "has", "enabled", "ready"),
    "float": ("ratio", "score", "rate", "weight"),
    "List[int]": ("nums", "ids", "steps", "depths"),
    "Dict[str, str]": ("aliases", "env", "mapping", "lookup"),
    "Optional[str]": ("note", "hint", "alias", "comment"),
    "List[str]": ("words", "labels", "lines", "titles"),
    "bytes": ("blob", "body", "raw", "chunk"),
    "Dict[str, List[str]]": ("groups", "bundles", "multimap", "buckets"),
    "Optional[bytes]": ("maybeblob", "rawopt", "bodyopt", "chunkopt"),
    "Tuple[str, str]": ("pair", "duo", "twin", "couple"),
    "Set[str]": ("tags", "uniques", "vocab", "seen"),
    "Optional[int]": ("maybecount", "numopt", "slot", "rank"),
    "Dict[str, int]": ("tally", "votes", "freq", "hist"),
    "List[bool]": ("masks", "bits", "gates", "switches"),
    "complex": ("phase", "wavepoint", "rot", "cnum"),
    "List[List[float]]": ("rows", "lattice", "plane", "sheets"),
    "Tuple[int, int]": ("span", "bounds", "cell", "coord"),
    "Set[int]": ("slots", "marks", "pins", "idset"),
    "List[float]": ("scores", "weights", "ratios", "rates"),
    "Optional[float]": ("maybescore", "rateopt", "scale", "gain"),
    "Dict[int, float]": ("sparse", "amounts", "loads", "curve"),
    "Tuple[float, float]": ("point", "extent", "minmax", "anchorpt"),
}

_NESTED_HEADS = ("List", "Optional", "Set", "FrozenSet", "Deque")
_NESTED_ARGS = (
    "int", "str", "float", "bool", "bytes", "complex", "Tuple[int, str]",
    "Dict[str, int]", "List[str]", "Set[float]",
)

_WORD_RE = re.compile(r"[A-Za-z]+")


def _type_words(type_str: str) -> tuple[str, ...]:
    if type_str in _TYPE_WORDS:
        return _TYPE_WORDS[type_str]
    # nested tail types: the lowercased constructor words are the signal
    pieces = [w.lower() for w in _WORD_RE.findall(type_str)]
    return ("_".join(pieces[:2]), "_".join(pieces[-2:]), pieces[0] + "grp")


def _nested_tail(offset: int, size: int) -> list[str]:
    combos = [f"{h}[{a}]" for a in _NESTED_ARGS for h in _NESTED_HEADS]
    out = []
    i = offset
    while len(out) < size:
        out.append(combos[i % len(combos)])
        i += 1
    return out


@dataclass
class FixtureSpec:
    """Shape of one synthetic two-domain corpus pair."""

    projects_per_domain: int = 14
    files_per_project: int = 4
    functions_per_file: int = 6
    shared_type_fraction: float = 0.55
    rare_tail_size: int = 24
    shift_magnitude: float = 0.9  # fraction of filler words from domain vocab
    local_class_weight: float = 0.4  # of the non-shared mass

    def __post_init__(self):
        if self.projects_per_domain < 3:
            raise ValueError("need at least 3 projects per domain for a split")
        if not 0.0 <= self.shared_type_fraction <= 1.0:
            raise ValueError("shared_type_fraction must be in [0, 1]")
        if not 0.0 <= self.shift_magnitude <= 1.0:
            raise ValueError("shift_magnitude must be in [0, 1]")
        if self.functions_per_file < 1 or self.files_per_project < 1:
            raise ValueError("degenerate fixture spec")
        if self.rare_tail_size < 0:
            raise ValueError("rare_tail_size must be >= 0")


class _DomainGenerator:
    def __init__(self, domain: str, spec: FixtureSpec, seed: int):
        self.domain = domain
        self.spec = spec
        self.rng = np.random.default_rng([seed, 0 if domain == "web" else 1])
        self.words = WEB_WORDS if domain == "web" else CAL_WORDS
        self.domain_types = list(_WEB_TYPES if domain == "web" else _CAL_TYPES)
        offset = 0 if domain == "web" else len(_NESTED_HEADS) * len(_NESTED_ARGS) // 2
        self.tail_types = _nested_tail(offset, spec.rare_tail_size)
        self.shared_cursor = 0
        self.class_counter = 0
        # deterministic structure counter: both domains get identical slot
        # counts, so a shared fraction of 1 yields exactly zero prior shift
        self.param_counter = 0

    def filler(self) -> str:
        pool = self.words if self.rng.random() < self.spec.shift_magnitude else SHARED_WORDS
        return pool[int(self.rng.integers(len(pool)))]

    def identifier_for(self, type_str: str, class_words: dict[str, str]) -> str:
        if type_str in class_words:
            signal = class_words[type_str]
        else:
            words = _type_words(type_str)
            signal = words[int(self.rng.integers(len(words)))]
        return f"{signal}_{self.filler()}"

    def pick_type(self, local_classes: list[str]) -> str:
        r = self.rng.random()
        if r < self.spec.shared_type_fraction or (not self.tail_types and not local_classes):
            t = _SHARED_TYPES[self.shared_cursor % len(_SHARED_TYPES)]
            self.shared_cursor += 1
            return t
        rest = r - self.spec.shared_type_fraction
        span = 1.0 - self.spec.shared_type_fraction
        use_local = local_classes and rest < span * self.spec.local_class_weight
        if use_local or not self.tail_types:
            return local_classes[int(self.rng.integers(len(local_classes)))]
        # long tail: geometric-ish decay over the nested pool
        pool = self.tail_types if self.rng.random() < 0.5 else self.domain_types
        idx = min(int(self.rng.exponential(scale=len(pool) / 3.0)), len(pool) - 1)
        return pool[idx]

    def signal_word(self, type_str: str, class_words: dict[str, str]) -> str:
        if type_str in class_words:
            return class_words[type_str]
        words = _type_words(type_str)
        return words[int(self.rng.integers(len(words)))]

    def make_function(
        self,
        suffix: str,
        local_classes: list[str],
        class_words: dict[str, str],
        indent: str = "",
    ) -> str:
        n_params = 1 + self.param_counter % 3
        self.param_counter += 1
        params = []
        for _ in range(n_params):
            ptype = self.pick_type(local_classes)
            params.append((self.identifier_for(ptype, class_words), ptype))
        ret_type = self.pick_type(local_classes)
        # the function name betrays the return type, as get_count/... would
        name = f"{self.signal_word(ret_type, class_words)}_{self.filler()}_{suffix}"
        local_type = self.pick_type(local_classes)
        local = self.identifier_for(local_type, class_words)
        loop_var = self.filler()

        sig_params = ", ".join(f"{p}: {t}" for p, t in params)
        if indent:
            sig_params = "self, " + sig_params
        lines = [f"{indent}def {name}({sig_params}) -> {ret_type}:"]
        body = indent + "    "
        first = params[0][0]
        lines.append(f"{body}{local}: {local_type} = {first}")
        for p, _ in params[1:]:
            lines.append(f"{body}if {p}:")
            lines.append(f"{body}    {local} = {p}")
        lines.append(f"{body}for {loop_var} in range(2):")
        lines.append(f"{body}    {local} = {local}")
        lines.append(f"{body}return {local}")
        return "\n".join(lines)

    def make_class(self) -> tuple[str, str, str]:
        self.class_counter += 1
        base = "Web" if self.domain == "web" else "Cal"
        word = self.filler()
        cname = f"{base}{word.capitalize()}{self.class_counter}"
        var_type = _SHARED_TYPES[self.shared_cursor % len(_SHARED_TYPES)]
        self.shared_cursor += 1
        var = self.identifier_for(var_type, {})
        method = self.make_function("m0", [cname], {cname: word}, indent="    ")
        text = f"class {cname}:\n    {var}: {var_type} = None\n\n{method}\n"
        return cname, word, text

    def make_module(self, module_index: int) -> str:
        parts = [
            "from typing import Deque, Dict, FrozenSet, List, Optional, Set, Tuple",
            "",
        ]
        local_classes: list[str] = []
        class_words: dict[str, str] = {}
        if module_index % 2 == 0:
            cname, word, ctext = self.make_class()
            local_classes.append(cname)
            class_words[cname] = word
            parts.append(ctext)
        mod_type = self.pick_type(local_classes)
        parts.append(f"{self.identifier_for(mod_type, class_words)}: {mod_type} = None")
        parts.append("")
        for i in range(self.spec.functions_per_file):
            parts.append(
                self.make_function(f"f{module_index}_{i}", local_classes, class_words)
            )
            parts.append("")
        return "\n".join(parts) + "\n"


def generate_fixture(spec: FixtureSpec, seed: int, out_dir: str | Path) -> dict[str, Path]:
    """Write the two synthetic corpora and return their root directories.

    Project directories follow the ``author__repo`` snapshot convention.
    Fully deterministic for a fixed spec and seed.
    """
    out_dir = Path(out_dir)
    roots: dict[str, Path] = {}
    for domain in ("web", "cal"):
        gen = _DomainGenerator(domain, spec, seed)
        domain_dir = out_dir / domain
        for p in range(spec.projects_per_domain):
            proj_dir = domain_dir / f"fix{domain}__proj{p:02d}"
            proj_dir.mkdir(parents=True, exist_ok=True)
            for f in range(spec.files_per_project):
                module = gen.make_module(p * spec.files_per_project + f)
                (proj_dir / f"module_{f}.py").write_text(module, encoding="utf-8")
        roots[domain] = domain_dir
    return roots


# ---------------------------------------------------------------------------
# feature-level fixtures with injected covariate shift
# ---------------------------------------------------------------------------

def make_shifted_feature_fixture(
    n: int, dim: int, offset: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Two Gaussian feature sets whose means differ by a constant offset."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, dim))
    b = rng.standard_normal((n, dim)) + offset
    return a, b


def make_shifted_sample_fixture(
    n_per_domain: int = 240,
    n_labels: int = 6,
    tokens_per_label: int = 4,
    embed_dim: int = 32,
    hint_dim: int = 8,
    shift: float = 2.0,
    hint_shift: bool = False,
    hint_labels: bool = True,
    seed: int = 0,
):
    """Synthetic encoder inputs with a mean-shifted target vocabulary.

    Source and target share labels and token structure, but every target
    token's embedding is the source twin's vector plus a constant offset of
    the given magnitude: a pure covariate shift at the model boundary.
    With ``hint_shift`` the last two hint dimensions additionally carry a
    domain indicator, mimicking domain-specific visible type hints;
    ``hint_labels=False`` leaves the flag as the only hint content.
    Returns (embedding_matrix, vocab, source_tensors, target_tensors).
    """
    from .model.samples import SampleTensors

    rng = np.random.default_rng(seed)
    src_tokens = [
        f"src_{lab}_{t}" for lab in range(n_labels) for t in range(tokens_per_label)
    ]
    tgt_tokens = [f"tgt{name[3:]}" for name in src_tokens]
    vocab = {t: i for i, t in enumerate(src_tokens + tgt_tokens)}

    base = rng.standard_normal((len(src_tokens), embed_dim))
    shift_vec = np.full(embed_dim, shift / np.sqrt(embed_dim))
    matrix = np.concatenate([base, base + shift_vec], axis=0)

    def build(prefix: str, domain: str) -> SampleTensors:
        ident_len, ctx_len = 8, 16
        ids_i = np.zeros((n_per_domain, ident_len), dtype=np.int64)
        len_i = np.zeros(n_per_domain, dtype=np.int64)
        ids_c = np.zeros((n_per_domain, ctx_len), dtype=np.int64)
        len_c = np.zeros(n_per_domain, dtype=np.int64)
        hints = np.zeros((n_per_domain, hint_dim), dtype=np.float32)
        labels = []
        for i in range(n_per_domain):
            lab = int(rng.integers(n_labels))
            labels.append(f"type_{lab}")
            pool = [
                vocab[f"{prefix}_{lab}_{t}"] + 2 for t in range(tokens_per_label)
            ]
            n_ident = 2 + int(rng.integers(ident_len - 2))
            picks = [pool[int(rng.integers(len(pool)))] for _ in range(n_ident)]
            ids_i[i, :n_ident] = picks
            len_i[i] = n_ident
            n_ctx = 4 + int(rng.integers(ctx_len - 4))
            picks = [pool[int(rng.integers(len(pool)))] for _ in range(n_ctx)]
            ids_c[i, :n_ctx] = picks
            len_c[i] = n_ctx
            if hint_labels:
                hints[i, lab % (hint_dim - 2 if hint_shift else hint_dim)] = 1.0
            if hint_shift:
                hints[i, -1 if domain == "target" else -2] = 1.0
        return SampleTensors(
            ident_ids=torch.from_numpy(ids_i),
            ident_len=torch.from_numpy(len_i),
            ctx_ids=torch.from_numpy(ids_c),
            ctx_len=torch.from_numpy(len_c),
            hints=torch.from_numpy(hints),
            labels=labels,
            domains=[domain] * n_per_domain,
            projects=[f"{domain}/p0"] * n_per_domain,
        )

    return matrix, vocab, build("src", "source"), build("tgt", "target")
