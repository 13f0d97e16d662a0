"""Metrics, slices, shift probes and significance."""

import numpy as np
import pytest

from typelab.evaluation import (
    covariate_probe,
    distribution_report,
    filter_predictable,
    prior_shift_report,
    significance,
    slice_metrics,
    visible_hint_overlap,
    weighted_f1,
    write_distribution_report,
)
from typelab.fixtures import make_shifted_feature_fixture
from typelab.model import VisibleTypeIndex
from typelab.normalize import build_label_space


def sklearn_weighted_f1(pairs):
    from sklearn.metrics import f1_score

    preds = [p for p, _ in pairs]
    actuals = [a for _, a in pairs]
    return f1_score(actuals, preds, average="weighted", zero_division=0)


class TestWeightedF1:
    def test_all_correct(self):
        assert weighted_f1([("a", "a"), ("b", "b")]) == 1.0

    def test_worked_example_nine_fourteenths(self):
        pairs = [("A", "A"), ("A", "A"), ("A", "A"), ("A", "B")]
        assert weighted_f1(pairs) == pytest.approx(9 / 14, abs=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            weighted_f1([])

    def test_matches_confusion_matrix_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 60))
            k = int(rng.integers(1, 8))
            pairs = [
                (f"c{int(rng.integers(k))}", f"c{int(rng.integers(k))}") for _ in range(n)
            ]
            assert weighted_f1(pairs) == pytest.approx(sklearn_weighted_f1(pairs), abs=1e-9)

    def test_bounds_and_perfection(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            pairs = [
                (f"c{int(rng.integers(4))}", f"c{int(rng.integers(4))}")
                for _ in range(30)
            ]
            score = weighted_f1(pairs)
            assert 0.0 <= score <= 1.0
            assert (score == 1.0) == all(p == a for p, a in pairs)


class TestFilterPredictable:
    def test_identity_when_all_predictable(self):
        labels = ["a", "b", "a"]
        out = filter_predictable(labels, {"a", "b"})
        assert out.sample_ids == [0, 1, 2]
        assert out.removed_fraction == 0.0

    def test_disjoint_label_sets_empty(self):
        out = filter_predictable(["a", "b"], {"z"})
        assert out.sample_ids == []
        assert out.removed_fraction == 1.0

    def test_matches_set_scan(self):
        rng = np.random.default_rng(2)
        labels = [f"t{int(rng.integers(10))}" for _ in range(100)]
        train = {f"t{i}" for i in range(5)}
        out = filter_predictable(labels, train)
        assert out.sample_ids == [i for i, lab in enumerate(labels) if lab in train]


class TestSliceMetrics:
    def test_all_common_all_correct(self):
        pairs = [("a", "a")] * 120
        space = build_label_space(["a"] * 120)
        result = slice_metrics(pairs, space, {"a"})
        assert result["common"] == 1.0
        assert result["rare"] is None  # undefined, not zero

    def test_predictable_at_least_all(self):
        rng = np.random.default_rng(3)
        train_labels = {f"t{i}" for i in range(4)}
        for _ in range(30):
            pairs = []
            for _ in range(60):
                actual = f"t{int(rng.integers(8))}"  # half unpredictable
                pred = f"t{int(rng.integers(4))}"
                pairs.append((pred, actual))
            space = build_label_space([a for _, a in pairs], threshold=5)
            result = slice_metrics(pairs, space, train_labels)
            if result["predictable_all"] is not None:
                assert result["predictable_all"] >= result["all"] - 1e-12


class TestDistributionReport:
    def test_identical_datasets(self):
        labels = ["a"] * 3 + ["b"] * 2 + ["c"]
        report = distribution_report({"x": labels, "y": list(labels)})
        assert report.top10["x"] == report.top10["y"] == [("a", 3), ("b", 2), ("c", 1)]
        ((_, _, shared, size_a, size_b),) = report.overlaps
        assert shared == size_a == size_b == 3

    def test_any_none_omitted(self):
        report = distribution_report({"x": ["a", "Any", "None", "a"]})
        assert report.top10["x"] == [("a", 2)]

    def test_constructed_overlap(self):
        a = [f"shared{i}" for i in range(4)] + ["only_a"]
        b = [f"shared{i}" for i in range(4)] + ["only_b1", "only_b2"]
        report = distribution_report({"a": a, "b": b})
        ((_, _, shared, size_a, size_b),) = report.overlaps
        assert (shared, size_a, size_b) == (4, 5, 6)

    def test_chart_emitted_and_parseable(self, tmp_path):
        report = distribution_report({"x": ["a", "a", "b"], "y": ["b", "c"]})
        write_distribution_report(report, tmp_path)
        png = (tmp_path / "top_types.png").read_bytes()
        assert png[:8] == b"\x89PNG\r\n\x1a\n"
        csv_text = (tmp_path / "top_types.csv").read_text()
        assert csv_text.splitlines()[0] == "dataset,rank,type,count"

    def test_visible_overlap(self):
        a = VisibleTypeIndex(("t1", "t2", "t3"))
        b = VisibleTypeIndex(("t2", "t3", "t4"))
        assert visible_hint_overlap(a, b) == 2


class TestCovariateProbe:
    def test_iid_split_near_chance(self):
        rng = np.random.default_rng(11)
        pool = rng.standard_normal((2400, 8))
        idx = rng.permutation(2400)
        report = covariate_probe(pool[idx[:1200]], pool[idx[1200:]], seed=5)
        assert 0.45 <= report.probe_f1 <= 0.55

    def test_constant_offset_separable(self):
        a, b = make_shifted_feature_fixture(n=600, dim=8, offset=3.0, seed=6)
        report = covariate_probe(a, b, seed=5)
        assert report.probe_f1 > 0.95

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            covariate_probe(np.zeros((10, 3)), np.zeros((10, 4)), seed=0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            covariate_probe(np.zeros((0, 3)), np.zeros((10, 3)), seed=0)


class TestPriorShift:
    def test_identical_multisets_zero(self):
        labels = ["a", "b", "b", "c"]
        assert prior_shift_report(labels, list(labels)).tv_distance == 0.0

    def test_disjoint_sets_distance_one(self):
        report = prior_shift_report(["a", "a"], ["b", "c"])
        assert report.tv_distance == pytest.approx(1.0)
        assert report.shared_types == 0

    def test_matches_half_l1_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            a = [f"t{int(rng.integers(6))}" for _ in range(int(rng.integers(1, 40)))]
            b = [f"t{int(rng.integers(6))}" for _ in range(int(rng.integers(1, 40)))]
            # brute force 0.5 * sum |p - q|
            types = set(a) | set(b)
            expected = 0.5 * sum(
                abs(a.count(t) / len(a) - b.count(t) / len(b)) for t in types
            )
            assert prior_shift_report(a, b).tv_distance == pytest.approx(expected, abs=1e-12)


class TestSignificance:
    def test_equal_runs_never_significant(self):
        result = significance([0.5, 0.5, 0.5], [0.5, 0.5, 0.5])
        assert not result.significant

    def test_identical_nonconstant_runs_not_significant(self):
        result = significance([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])
        assert not result.significant
        assert result.p_value == pytest.approx(1.0)

    def test_extreme_separation_significant(self):
        result = significance([0.10, 0.101, 0.099], [0.90, 0.901, 0.899])
        assert result.significant
        assert result.mean_b == pytest.approx(90.0, abs=0.1)

    def test_symmetry(self):
        a, b = [0.3, 0.35, 0.32], [0.5, 0.52, 0.49]
        assert significance(a, b).p_value == pytest.approx(significance(b, a).p_value)

    def test_needs_two_runs(self):
        with pytest.raises(ValueError):
            significance([0.5], [0.4, 0.6])

    def test_p_value_matches_incomplete_beta_oracle(self):
        import mpmath

        rng = np.random.default_rng(9)
        for _ in range(40):
            a = rng.normal(0.5, 0.05, size=3)
            b = rng.normal(0.55, 0.05, size=3)
            result = significance(a.tolist(), b.tolist())
            # two-sided Student t: p = I_{df/(df+t^2)}(df/2, 1/2)
            n1, n2 = len(a), len(b)
            df = n1 + n2 - 2
            sp2 = ((n1 - 1) * a.var(ddof=1) + (n2 - 1) * b.var(ddof=1)) / df
            t = (a.mean() - b.mean()) / np.sqrt(sp2 * (1 / n1 + 1 / n2))
            x = df / (df + t * t)
            expected = float(mpmath.betainc(df / 2, mpmath.mpf(1) / 2, 0, x, regularized=True))
            assert result.p_value == pytest.approx(expected, abs=1e-6)
