"""Evaluation metrics: weighted F1 slices, shift probes, significance tests."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .normalize import LabelSpace

__all__ = [
    "EvalSlice",
    "ShiftProbeReport",
    "PriorShiftReport",
    "SignificanceResult",
    "weighted_f1",
    "filter_predictable",
    "slice_metrics",
    "distribution_report",
    "DistributionReport",
    "visible_hint_overlap",
    "covariate_probe",
    "prior_shift_report",
    "significance",
    "SLICE_NAMES",
    "PROBE_FOLDS",
]

SLICE_NAMES = (
    "all",
    "common",
    "rare",
    "predictable_all",
    "predictable_common",
    "predictable_rare",
)

PROBE_FOLDS = 6
PROBE_TREES = 100
SIGNIFICANCE_ALPHA = 0.05


def weighted_f1(predictions: Sequence[tuple[str, str]]) -> float:
    """Top-1 F1 weighted by class support.

    Per-class F1 comes from the usual precision/recall over the confusion
    counts; weights are class support over total. Classes never appearing
    as an actual label carry zero support and contribute nothing.
    """
    if not predictions:
        raise ValueError("empty prediction list")
    support: dict[str, int] = {}
    true_pos: dict[str, int] = {}
    pred_count: dict[str, int] = {}
    for predicted, actual in predictions:
        support[actual] = support.get(actual, 0) + 1
        pred_count[predicted] = pred_count.get(predicted, 0) + 1
        if predicted == actual:
            true_pos[actual] = true_pos.get(actual, 0) + 1

    total = len(predictions)
    score = 0.0
    for cls, sup in support.items():
        tp = true_pos.get(cls, 0)
        pred = pred_count.get(cls, 0)
        precision = tp / pred if pred else 0.0
        recall = tp / sup
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        score += f1 * (sup / total)
    return score


@dataclass
class EvalSlice:
    name: str
    sample_ids: list[int]
    removed_fraction: float = 0.0


def filter_predictable(
    test_labels: Sequence[str], train_label_set: set[str]
) -> EvalSlice:
    """Keep the samples whose label occurs in the training label set."""
    kept = [i for i, lab in enumerate(test_labels) if lab in train_label_set]
    removed = 1.0 - len(kept) / len(test_labels) if test_labels else 0.0
    return EvalSlice("predictable_all", kept, removed)


def slice_metrics(
    predictions: Sequence[tuple[str, str]],
    label_space: LabelSpace,
    train_label_set: set[str],
) -> dict[str, float | None]:
    """Weighted F1 on the six common/rare x all/predictable slices.

    The common/rare partition comes from the evaluation dataset's own label
    space. An empty slice reports None (undefined), never zero.
    """
    def subset(ids: Sequence[int]) -> float | None:
        if not ids:
            return None
        return weighted_f1([predictions[i] for i in ids])

    all_ids = list(range(len(predictions)))
    common_ids = [i for i in all_ids if predictions[i][1] in label_space.common]
    rare_ids = [i for i in all_ids if predictions[i][1] in label_space.rare]
    predictable = set(
        filter_predictable([a for _, a in predictions], train_label_set).sample_ids
    )
    return {
        "all": subset(all_ids),
        "common": subset(common_ids),
        "rare": subset(rare_ids),
        "predictable_all": subset([i for i in all_ids if i in predictable]),
        "predictable_common": subset([i for i in common_ids if i in predictable]),
        "predictable_rare": subset([i for i in rare_ids if i in predictable]),
    }


# ---------------------------------------------------------------------------
# distribution report
# ---------------------------------------------------------------------------

@dataclass
class DistributionReport:
    top10: dict[str, list[tuple[str, int]]]
    overlaps: list[tuple[str, str, int, int, int]]  # a, b, shared, |a|, |b|


def distribution_report(datasets: Mapping[str, Sequence[str]]) -> DistributionReport:
    """Per-dataset top-10 type frequencies plus pairwise label-set overlap.

    Any/None never appear here; they were dropped during normalization and
    are filtered again defensively.
    """
    top10 = {}
    label_sets = {}
    for name, labels in datasets.items():
        counts: dict[str, int] = {}
        for lab in labels:
            if lab in ("Any", "None"):
                continue
            counts[lab] = counts.get(lab, 0) + 1
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        top10[name] = ranked[:10]
        label_sets[name] = set(counts)

    names = sorted(datasets)
    overlaps = []
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            overlaps.append(
                (a, b, len(label_sets[a] & label_sets[b]), len(label_sets[a]), len(label_sets[b]))
            )
    return DistributionReport(top10=top10, overlaps=overlaps)


def visible_hint_overlap(index_a, index_b) -> int:
    """How many types the two visible-hint indices share."""
    return len(set(index_a.types) & set(index_b.types))


def write_distribution_report(report: DistributionReport, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "top_types.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "rank", "type", "count"])
        for name in sorted(report.top10):
            for rank, (typ, count) in enumerate(report.top10[name], start=1):
                writer.writerow([name, rank, typ, count])
    with (out_dir / "type_overlap.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset_a", "dataset_b", "shared_types", "types_a", "types_b"])
        for row in report.overlaps:
            writer.writerow(row)

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = sorted(report.top10)
    fig, axes = plt.subplots(1, max(len(names), 1), figsize=(6 * max(len(names), 1), 4))
    if len(names) <= 1:
        axes = [axes]
    for ax, name in zip(axes, names):
        entries = report.top10[name]
        ax.barh([t for t, _ in reversed(entries)], [c for _, c in reversed(entries)])
        ax.set_title(name)
        ax.set_xlabel("occurrences")
    fig.tight_layout()
    fig.savefig(out_dir / "top_types.png", dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# shift probes
# ---------------------------------------------------------------------------

@dataclass
class ShiftProbeReport:
    probe_f1: float
    folds: int = PROBE_FOLDS
    feature_source: str = ""


def covariate_probe(
    features_a: np.ndarray,
    features_b: np.ndarray,
    seed: int = 0,
    feature_source: str = "",
) -> ShiftProbeReport:
    """Train a randomized-tree classifier to tell the two feature sets apart.

    Mean macro-F1 under 6-fold cross-validation: near 0.5 means the features
    carry no domain information, high values mean they are shifted.
    """
    from sklearn.ensemble import ExtraTreesClassifier
    from sklearn.model_selection import StratifiedKFold, cross_val_score

    a = np.asarray(features_a)
    b = np.asarray(features_b)
    if a.size == 0 or b.size == 0:
        raise ValueError("both feature sets must be non-empty")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"feature dims differ: {a.shape[1]} vs {b.shape[1]}")

    x = np.concatenate([a, b], axis=0)
    y = np.concatenate([np.zeros(len(a)), np.ones(len(b))])
    clf = ExtraTreesClassifier(
        n_estimators=PROBE_TREES, max_depth=None, random_state=seed, n_jobs=1
    )
    cv = StratifiedKFold(n_splits=PROBE_FOLDS, shuffle=True, random_state=seed)
    scores = cross_val_score(clf, x, y, cv=cv, scoring="f1_macro", n_jobs=1)
    return ShiftProbeReport(float(scores.mean()), PROBE_FOLDS, feature_source)


@dataclass
class PriorShiftReport:
    tv_distance: float
    shared_types: int
    only_a: int
    only_b: int


def prior_shift_report(labels_a: Sequence[str], labels_b: Sequence[str]) -> PriorShiftReport:
    """Total-variation distance between the empirical label distributions."""
    counts_a: dict[str, int] = {}
    counts_b: dict[str, int] = {}
    for lab in labels_a:
        counts_a[lab] = counts_a.get(lab, 0) + 1
    for lab in labels_b:
        counts_b[lab] = counts_b.get(lab, 0) + 1
    n_a = max(sum(counts_a.values()), 1)
    n_b = max(sum(counts_b.values()), 1)
    tv = 0.5 * sum(
        abs(counts_a.get(t, 0) / n_a - counts_b.get(t, 0) / n_b)
        for t in set(counts_a) | set(counts_b)
    )
    return PriorShiftReport(
        tv_distance=tv,
        shared_types=len(set(counts_a) & set(counts_b)),
        only_a=len(set(counts_a) - set(counts_b)),
        only_b=len(set(counts_b) - set(counts_a)),
    )


# ---------------------------------------------------------------------------
# significance
# ---------------------------------------------------------------------------

@dataclass
class SignificanceResult:
    mean_a: float  # percent
    mean_b: float
    std_a: float
    std_b: float
    p_value: float
    significant: bool
    alpha: float = SIGNIFICANCE_ALPHA


def significance(
    runs_a: Sequence[float], runs_b: Sequence[float], alpha: float = SIGNIFICANCE_ALPHA
) -> SignificanceResult:
    """Two-sample Student's t-test over repeated runs (F1 fractions).

    Means and standard deviations are reported in percent, as in the result
    tables. Identical constant runs yield an undefined statistic and are
    never significant.
    """
    a = np.asarray(runs_a, dtype=np.float64)
    b = np.asarray(runs_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("need at least 2 runs per condition")
    with warnings.catch_warnings():
        # constant inputs are a legitimate case: p is nan, never significant
        warnings.simplefilter("ignore", RuntimeWarning)
        t_res = scipy_stats.ttest_ind(a, b, equal_var=True)
    p = float(t_res.pvalue)
    significant = bool(p < alpha) if np.isfinite(p) else False
    return SignificanceResult(
        mean_a=float(a.mean() * 100),
        mean_b=float(b.mean() * 100),
        std_a=float(a.std(ddof=1) * 100),
        std_b=float(b.std(ddof=1) * 100),
        p_value=p,
        significant=significant,
        alpha=alpha,
    )
