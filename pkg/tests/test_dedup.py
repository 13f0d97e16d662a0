"""TF-IDF vectors, duplicate clustering, repo-overlap removal."""

import math

import numpy as np
import pytest

from typelab.dedup import (
    DuplicateCluster,
    FileVector,
    build_file_vectors,
    cluster_duplicates,
    dedup_corpora,
    dedup_repos,
    write_manifest,
)
from typelab.repos import RepoRef


def ref(url, stars=0):
    return RepoRef(url=url, stars=stars)


class TestDedupRepos:
    def test_disjoint_inputs_untouched(self):
        a = [ref("u1"), ref("u2")]
        b = [ref("u3")]
        out_a, out_b = dedup_repos(a, b, seed=0)
        assert out_a == a and out_b == b

    def test_four_shared_split_two_two(self):
        shared = [ref(f"s{i}") for i in range(4)]
        a = shared + [ref("a-only")]
        b = shared + [ref("b-only")]
        out_a, out_b = dedup_repos(a, b, seed=1)
        removed_a = {r.url for r in a} - {r.url for r in out_a}
        removed_b = {r.url for r in b} - {r.url for r in out_b}
        assert len(removed_a) == 2 and len(removed_b) == 2
        assert removed_a | removed_b == {r.url for r in shared}
        assert not removed_a & removed_b

    def test_seven_shared_two_seeds(self):
        shared = [ref(f"s{i}") for i in range(7)]
        partitions = []
        for seed in (3, 4):
            out_a, out_b = dedup_repos(list(shared), list(shared), seed)
            urls_a = {r.url for r in out_a}
            urls_b = {r.url for r in out_b}
            assert not urls_a & urls_b
            assert sorted([len(urls_a), len(urls_b)]) == [3, 4]
            partitions.append(frozenset(urls_a))
        assert partitions[0] != partitions[1]

    def test_outputs_always_disjoint(self):
        rng = np.random.default_rng(0)
        for seed in range(30):
            n_shared = int(rng.integers(0, 8))
            shared = [ref(f"s{i}") for i in range(n_shared)]
            a = shared + [ref(f"a{i}") for i in range(int(rng.integers(0, 5)))]
            b = shared + [ref(f"b{i}") for i in range(int(rng.integers(0, 5)))]
            out_a, out_b = dedup_repos(a, b, seed)
            assert not {r.url for r in out_a} & {r.url for r in out_b}


class TestFileVectors:
    def test_identical_files_identical_vectors(self):
        src = "def run(alpha, beta):\n    return alpha\n"
        v1, v2 = build_file_vectors([("a", src), ("b", src)])
        assert v1.weights == v2.weights

    def test_no_identifiers_empty_map(self):
        (v,) = build_file_vectors([("a", "42\n")])
        assert v.weights == {}

    def test_hand_computed_tfidf(self):
        # doc1: alpha x2, beta x1; doc2: alpha, gamma; doc3: delta x3
        files = [
            ("d1", "alpha = beta(alpha)"),
            ("d2", "alpha = gamma"),
            ("d3", "delta = delta(delta)"),
        ]
        vectors = {v.file_id: v.weights for v in build_file_vectors(files)}
        n = 3
        idf = lambda df: math.log((1 + n) / (1 + df)) + 1.0
        assert vectors["d1"] == pytest.approx(
            {"alpha": 2 * idf(2), "beta": 1 * idf(1)}
        )
        assert vectors["d2"] == pytest.approx(
            {"alpha": 1 * idf(2), "gamma": 1 * idf(1)}
        )
        assert vectors["d3"] == pytest.approx({"delta": 3 * idf(1)})

    def test_unparseable_flagged_regex_fallback(self):
        (v,) = build_file_vectors([("a", "def broken(:\n    alpha beta\n")])
        assert v.flagged
        assert "alpha" in v.weights


# brute-force oracle: all-pairs cosine graph, connected components
def components_oracle(vectors, threshold):
    def cosine(u, v):
        if u.weights == v.weights:
            return 1.0
        shared = set(u.weights) & set(v.weights)
        dot = sum(u.weights[t] * v.weights[t] for t in shared)
        nu = math.sqrt(sum(w * w for w in u.weights.values()))
        nv = math.sqrt(sum(w * w for w in v.weights.values()))
        if nu == 0.0 or nv == 0.0:
            return 0.0
        return dot / (nu * nv)

    n = len(vectors)
    adj = {i: set() for i in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            if cosine(vectors[i], vectors[j]) >= threshold:
                adj[i].add(j)
                adj[j].add(i)
    seen = set()
    comps = []
    for i in range(n):
        if i in seen:
            continue
        stack, comp = [i], set()
        while stack:
            k = stack.pop()
            if k in comp:
                continue
            comp.add(k)
            stack.extend(adj[k] - comp)
        seen |= comp
        comps.append(frozenset(vectors[k].file_id for k in comp))
    return set(comps)


def random_corpus(rng, n_files):
    words = [f"w{i}" for i in range(12)]
    files = []
    base_docs = []
    for b in range(max(2, n_files // 4)):
        k = int(rng.integers(3, 9))
        base_docs.append(" ".join(rng.choice(words, size=k)))
    for i in range(n_files):
        base = base_docs[int(rng.integers(len(base_docs)))]
        if rng.random() < 0.5:
            text = base  # exact duplicate of a base doc
        else:
            extra = " ".join(rng.choice(words, size=int(rng.integers(0, 3))))
            text = base + " " + extra
        files.append((f"f{i}", text))
    return files


class TestClusterDuplicates:
    def test_orthogonal_singletons(self):
        vectors = [
            FileVector("a", {"x": 1.0}),
            FileVector("b", {"y": 1.0}),
            FileVector("c", {"z": 1.0}),
        ]
        clusters = cluster_duplicates(vectors, 0.95, 10, seed=0)
        assert sorted(sorted(c.members) for c in clusters) == [["a"], ["b"], ["c"]]
        for c in clusters:
            assert c.survivor in c.members

    def test_pair_plus_singleton(self):
        vectors = [
            FileVector("a", {"x": 2.0, "y": 1.0}),
            FileVector("b", {"x": 2.0, "y": 1.0}),
            FileVector("c", {"z": 5.0}),
        ]
        clusters = cluster_duplicates(vectors, 0.95, 10, seed=0)
        members = sorted(sorted(c.members) for c in clusters)
        assert members == [["a", "b"], ["c"]]

    def test_idempotent_on_survivors(self):
        rng = np.random.default_rng(7)
        vectors = build_file_vectors(random_corpus(rng, 40))
        clusters = cluster_duplicates(vectors, 0.9, 10, seed=1)
        survivors = {c.survivor for c in clusters}
        again = cluster_duplicates(
            [v for v in vectors if v.file_id in survivors], 0.9, 10, seed=2
        )
        assert all(len(c.members) == 1 for c in again)

    def test_byte_identical_always_co_clustered(self):
        # more identical files than k: candidate pruning must not split them
        src = "value = compute(value)\n"
        files = [(f"f{i}", src) for i in range(30)] + [("g", "other = thing\n")]
        vectors = build_file_vectors(files)
        for threshold in (0.5, 0.95, 1.0):
            clusters = cluster_duplicates(vectors, threshold, k=10, seed=0)
            big = [c for c in clusters if len(c.members) >= 30]
            assert big and {f"f{i}" for i in range(30)} <= big[0].members

    def test_identifier_free_identical_files_co_clustered(self):
        vectors = build_file_vectors([("a", "42\n"), ("b", "42\n"), ("c", "ident = 1\n")])
        clusters = cluster_duplicates(vectors, 0.95, 10, seed=0)
        assert {frozenset(c.members) for c in clusters} == {
            frozenset({"a", "b"}),
            frozenset({"c"}),
        }

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_all_pairs_oracle(self, seed):
        rng = np.random.default_rng(seed)
        for n_files in (10, 60, 200):
            files = random_corpus(rng, n_files)
            vectors = build_file_vectors(files)
            clusters = cluster_duplicates(vectors, 0.9, 10, seed=seed)
            got = {frozenset(c.members) for c in clusters}
            assert got == components_oracle(vectors, 0.9)

    def test_survivor_accounting(self):
        rng = np.random.default_rng(3)
        vectors = build_file_vectors(random_corpus(rng, 80))
        clusters = cluster_duplicates(vectors, 0.9, 10, seed=5)
        survivors = [c.survivor for c in clusters]
        assert len(survivors) == len(clusters)
        all_members = [m for c in clusters for m in c.members]
        assert sorted(all_members) == sorted(v.file_id for v in vectors)
        deleted = {m for c in clusters for m in c.deleted()}
        assert deleted.isdisjoint(survivors)
        assert deleted | set(survivors) == {v.file_id for v in vectors}

    def test_bad_params(self):
        with pytest.raises(ValueError):
            cluster_duplicates([], similarity_threshold=0.0)
        with pytest.raises(ValueError):
            cluster_duplicates([], k=0)


class TestCrossCorpus:
    def test_cross_corpus_duplicate_removed(self):
        shared = "def handler(request):\n    return request\n"
        files_a = [("a/f1", shared), ("a/f2", "alpha = 1\n")]
        files_b = [("b/f1", shared), ("b/f2", "beta = 2\n")]
        kept_a, kept_b, clusters = dedup_corpora(files_a, files_b, seed=0)
        assert ("a/f1" in kept_a) != ("b/f1" in kept_b)
        assert "a/f2" in kept_a and "b/f2" in kept_b

    def test_majority_side_keeps_duplicate(self):
        shared = "def solver(matrix):\n    return matrix\n"
        files_a = [("a/f1", shared), ("a/f2", shared)]
        files_b = [("b/f1", shared)]
        kept_a, kept_b, _ = dedup_corpora(files_a, files_b, seed=0)
        assert kept_b == set()
        assert len(kept_a) == 1


class TestManifest:
    def test_manifest_format(self, tmp_path):
        clusters = [
            DuplicateCluster(members={"a", "b"}, survivor="a"),
            DuplicateCluster(members={"c"}, survivor="c"),
        ]
        path = tmp_path / "manifest.csv"
        write_manifest(clusters, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "file_id,cluster_id,survivor"
        assert lines[1:] == ["a,0,1", "b,0,0", "c,1,1"]
