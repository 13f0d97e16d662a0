"""Repository-overlap removal and near-duplicate file detection.

Files are embedded as TF-IDF vectors over their identifier tokens
(tf = raw count, idf = ln((1+N)/(1+df)) + 1, strictly positive so a
non-empty token stream never maps to the zero vector). Duplicate clusters
are connected components of the thresholded cosine-similarity graph;
identical token multisets count as similarity 1 regardless of norm, so
byte-identical files always co-cluster. For corpora above the dense
cutoff the graph is restricted to mutual k-nearest-neighbour candidate
pairs plus exact-duplicate groups.
"""

from __future__ import annotations

import csv
import io
import keyword
import re
import tokenize
from collections import Counter
from dataclasses import dataclass
from math import log
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .repos import RepoRef

__all__ = [
    "FileVector",
    "DuplicateCluster",
    "dedup_repos",
    "build_file_vectors",
    "cluster_duplicates",
    "dedup_corpora",
    "write_manifest",
    "SIMILARITY_THRESHOLD",
    "KNN_K",
    "DENSE_CUTOFF",
]

SIMILARITY_THRESHOLD = 0.95
KNN_K = 10
# below this corpus size the full similarity graph is computed exactly
DENSE_CUTOFF = 2048

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass
class FileVector:
    file_id: str
    weights: dict[str, float]
    flagged: bool = False  # tokenized by regex fallback


@dataclass
class DuplicateCluster:
    members: set[str]
    survivor: str

    def deleted(self) -> set[str]:
        return self.members - {self.survivor}


# ---------------------------------------------------------------------------
# repo-level dedup
# ---------------------------------------------------------------------------

def dedup_repos(
    list_a: Sequence[RepoRef],
    list_b: Sequence[RepoRef],
    seed: int,
) -> tuple[list[RepoRef], list[RepoRef]]:
    """Make the two repo lists URL-disjoint.

    Repos present in both lists are split as evenly as possible: a seeded
    shuffle removes the first half from list a and the rest from list b
    (ceil(n/2) removals land on a).
    """
    urls_a = {r.url for r in list_a}
    urls_b = {r.url for r in list_b}
    shared = sorted(urls_a & urls_b)
    rng = np.random.default_rng(seed)
    order = [shared[i] for i in rng.permutation(len(shared))]
    half = (len(order) + 1) // 2
    remove_from_a = set(order[:half])
    remove_from_b = set(order[half:])
    out_a = [r for r in list_a if r.url not in remove_from_a]
    out_b = [r for r in list_b if r.url not in remove_from_b]
    return out_a, out_b


# ---------------------------------------------------------------------------
# file vectors
# ---------------------------------------------------------------------------

def _identifier_tokens(source: str) -> tuple[list[str], bool]:
    try:
        toks = [
            t.string
            for t in tokenize.generate_tokens(io.StringIO(source).readline)
            if t.type == tokenize.NAME and not keyword.iskeyword(t.string)
        ]
        return toks, False
    except (tokenize.TokenError, IndentationError):
        toks = [t for t in _IDENT_RE.findall(source) if not keyword.iskeyword(t)]
        return toks, True


def build_file_vectors(files: Sequence[tuple[str, str]]) -> list[FileVector]:
    """TF-IDF vectors over identifier tokens, IDF fit on the given collection."""
    counts: list[Counter[str]] = []
    flags: list[bool] = []
    for _, source in files:
        toks, flagged = _identifier_tokens(source)
        counts.append(Counter(toks))
        flags.append(flagged)

    n_docs = len(files)
    df: Counter[str] = Counter()
    for c in counts:
        df.update(c.keys())

    vectors = []
    for (file_id, _), c, flagged in zip(files, counts, flags):
        weights = {
            tok: tf * (log((1 + n_docs) / (1 + df[tok])) + 1.0)
            for tok, tf in c.items()
        }
        vectors.append(FileVector(file_id, weights, flagged))
    return vectors


# ---------------------------------------------------------------------------
# clustering
# ---------------------------------------------------------------------------

class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _dense_matrix(vectors: Sequence[FileVector]) -> np.ndarray:
    vocab = sorted({tok for v in vectors for tok in v.weights})
    index = {tok: i for i, tok in enumerate(vocab)}
    mat = np.zeros((len(vectors), max(len(vocab), 1)), dtype=np.float64)
    for row, v in enumerate(vectors):
        for tok, w in v.weights.items():
            mat[row, index[tok]] = w
    return mat


def _normalized(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return mat / norms


def _exact_duplicate_groups(vectors: Sequence[FileVector], uf: _UnionFind) -> None:
    by_weights: dict[tuple, int] = {}
    for i, v in enumerate(vectors):
        key = tuple(sorted(v.weights.items()))
        if key in by_weights:
            uf.union(by_weights[key], i)
        else:
            by_weights[key] = i


def cluster_duplicates(
    vectors: Sequence[FileVector],
    similarity_threshold: float = SIMILARITY_THRESHOLD,
    k: int = KNN_K,
    seed: int = 0,
) -> list[DuplicateCluster]:
    """Group near-duplicate files and pick one seeded random survivor each.

    Clusters are the connected components of the graph with an edge wherever
    cosine similarity reaches the threshold (or the weight maps are
    identical). ``k`` bounds the candidate neighbourhood only for corpora
    larger than the dense cutoff.
    """
    if not 0.0 < similarity_threshold <= 1.0:
        raise ValueError("similarity_threshold must be in (0, 1]")
    if k < 1:
        raise ValueError("k must be positive")
    n = len(vectors)
    if n == 0:
        return []

    uf = _UnionFind(n)
    _exact_duplicate_groups(vectors, uf)

    mat = _normalized(_dense_matrix(vectors))
    if n <= DENSE_CUTOFF:
        sims = mat @ mat.T
        ii, jj = np.nonzero(np.triu(sims >= similarity_threshold, k=1))
        for i, j in zip(ii.tolist(), jj.tolist()):
            uf.union(i, j)
    else:
        # mutual-kNN candidate pairs; exact-duplicate groups already merged
        from sklearn.neighbors import NearestNeighbors

        nn = NearestNeighbors(n_neighbors=min(k + 1, n), metric="cosine")
        nn.fit(mat)
        _, idx = nn.kneighbors(mat)
        neighbor_sets = [set(row.tolist()) - {i} for i, row in enumerate(idx)]
        for i in range(n):
            for j in neighbor_sets[i]:
                if i < j and i in neighbor_sets[j]:
                    if float(mat[i] @ mat[j]) >= similarity_threshold:
                        uf.union(i, j)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)

    rng = np.random.default_rng(seed)
    clusters = []
    for root in sorted(groups):
        members = sorted(groups[root])
        survivor = members[int(rng.integers(len(members)))]
        clusters.append(
            DuplicateCluster(
                members={vectors[i].file_id for i in members},
                survivor=vectors[survivor].file_id,
            )
        )
    return clusters


# ---------------------------------------------------------------------------
# cross-corpus file dedup
# ---------------------------------------------------------------------------

def dedup_corpora(
    files_a: Sequence[tuple[str, str]],
    files_b: Sequence[tuple[str, str]],
    similarity_threshold: float = SIMILARITY_THRESHOLD,
    k: int = KNN_K,
    seed: int = 0,
) -> tuple[set[str], set[str], list[DuplicateCluster]]:
    """Remove duplicate files within and across the two corpora.

    Clusters are computed on the union. For a cluster spanning both corpora
    the survivor is drawn from the side holding more of its members (file
    duplicates stay with their native corpus; ties favour corpus a).
    Returns the kept file ids per corpus plus the full cluster list.
    """
    ids_a = {fid for fid, _ in files_a}
    vectors = build_file_vectors(list(files_a) + list(files_b))
    clusters = cluster_duplicates(vectors, similarity_threshold, k, seed)

    rng = np.random.default_rng(seed + 1)
    kept_a: set[str] = set()
    kept_b: set[str] = set()
    for c in clusters:
        side_a = sorted(m for m in c.members if m in ids_a)
        side_b = sorted(m for m in c.members if m not in ids_a)
        if side_a and side_b:
            pool = side_a if len(side_a) >= len(side_b) else side_b
            c.survivor = pool[int(rng.integers(len(pool)))]
        (kept_a if c.survivor in ids_a else kept_b).add(c.survivor)
    return kept_a, kept_b, clusters


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def write_manifest(clusters: Iterable[DuplicateCluster], path: str | Path) -> None:
    """Deletion manifest CSV: file_id, cluster_id, survivor flag."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["file_id", "cluster_id", "survivor"])
        for cid, cluster in enumerate(clusters):
            for member in sorted(cluster.members):
                writer.writerow([member, cid, int(member == cluster.survivor)])
