"""End-to-end pipeline with content-addressed stage caching.

Stages: fixture -> dedup -> split -> extract -> samples -> embed -> one
training/evaluation run per seed -> report. Every stage writes into a
directory keyed by the hash of its inputs, so re-runs only rebuild what
changed and a finished run is byte-reproducible.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import os
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from . import dedup as dedup_mod
from . import embeddings as emb_mod
from . import evaluation as eval_mod
from . import extract as extract_mod
from . import normalize as norm_mod
from .config import ExperimentConfig, config_hash
from .fixtures import generate_fixture
from .model import (
    EncoderParams,
    TypeEncoder,
    TypeSample,
    attach_hints,
    build_type_cluster,
    build_visible_type_index,
    dann_train,
    fine_tune,
    model_tokens,
    predict_batch,
    samples_from_records,
    save_checkpoint,
    train,
    vectorize,
    wdgrl_train,
)

__all__ = ["run_pipeline", "StageError", "default_workdir", "CONDITIONS"]

CONDITIONS = ("cross", "indomain", "dann", "wdgrl", "finetune")

CACHE_ENV_VAR = "TYPELAB_CACHE"


class StageError(Exception):
    def __init__(self, stage: str, message: str, rerun: str):
        super().__init__(f"stage {stage!r} failed: {message}\nreproduce with: {rerun}")
        self.stage = stage
        self.rerun = rerun


def default_workdir() -> Path:
    return Path(os.environ.get(CACHE_ENV_VAR, "typelab_work"))


def _hash_obj(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1), encoding="utf-8")


class _Stages:
    """Stage runner: builds into content-addressed directories."""

    def __init__(self, cfg: ExperimentConfig, workdir: Path):
        self.cfg = cfg
        self.workdir = Path(workdir)
        self.cfg_hash = config_hash(cfg)
        self.rerun_hint = (
            f"typelab run --config <your config> --workdir {self.workdir}"
            f"  (config hash {self.cfg_hash})"
        )

    def run(self, name: str, key: dict, builder: Callable[[Path], None]) -> Path:
        out = self.workdir / "cache" / name / _hash_obj(key)
        manifest = out / "_MANIFEST.json"
        if manifest.exists():
            return out
        out.mkdir(parents=True, exist_ok=True)
        try:
            builder(out)
        except Exception as exc:  # noqa: BLE001 - rewrapped with stage context
            raise StageError(name, str(exc), self.rerun_hint) from exc
        files = sorted(
            str(p.relative_to(out))
            for p in out.rglob("*")
            if p.is_file() and p.name != "_MANIFEST.json"
        )
        _dump_json(manifest, {"key": key, "files": {f: _sha256_file(out / f) for f in files}})
        return out


# ---------------------------------------------------------------------------
# sample (de)serialization
# ---------------------------------------------------------------------------

def _write_samples(path: Path, samples: Sequence[TypeSample], splits: dict[str, str]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(
                json.dumps(
                    {
                        "identifier_tokens": s.identifier_tokens,
                        "context_tokens": s.context_tokens,
                        "label": s.label,
                        "domain": s.domain_tag,
                        "project": s.project_id,
                        "kind": s.kind,
                        "file_types": sorted(s.file_types),
                        "split": splits[s.project_id],
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def _read_samples(path: Path) -> list[tuple[TypeSample, str]]:
    out = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            d = json.loads(line)
            out.append(
                (
                    TypeSample(
                        identifier_tokens=d["identifier_tokens"],
                        context_tokens=d["context_tokens"],
                        label=d["label"],
                        domain_tag=d["domain"],
                        project_id=d["project"],
                        kind=d["kind"],
                        file_types=frozenset(d["file_types"]),
                    ),
                    d["split"],
                )
            )
    return out


# ---------------------------------------------------------------------------
# per-seed experiment
# ---------------------------------------------------------------------------

def _subsample(rng: np.random.Generator, n: int, cap: int) -> np.ndarray:
    if n <= cap:
        return np.arange(n)
    return np.sort(rng.choice(n, size=cap, replace=False))


def run_experiment(
    cfg: ExperimentConfig,
    seed: int,
    samples: dict[tuple[str, str], list[TypeSample]],
    embedding: emb_mod.EmbeddingModel,
    checkpoint_dir: Path | None = None,
) -> dict:
    """Train all conditions for one seed and evaluate on the target test set."""
    src, tgt = cfg.source_domain, cfg.target_domain
    src_train = samples[(src, "train")]
    tgt_train = samples[(tgt, "train")]
    tgt_test = samples[(tgt, "test")]
    if not src_train or not tgt_train or not tgt_test:
        raise ValueError("empty split; fixture too small")

    tgt_all_labels = [
        s.label
        for split in ("train", "valid", "test")
        for s in samples[(tgt, split)]
    ]
    tgt_space = norm_mod.build_label_space(tgt_all_labels, cfg.common_threshold)

    index_src = build_visible_type_index(src_train, cfg.visible_index_size)
    index_tgt = build_visible_type_index(tgt_train, cfg.visible_index_size)

    def tensors(group: list[TypeSample], index) -> "object":
        attach_hints(group, index)
        return vectorize(group, embedding.vocab, cfg.ident_len, cfg.ctx_len)

    vec_src_train = tensors(src_train, index_src)
    vec_tgt_train_srcidx = tensors(tgt_train, index_src)
    vec_tgt_test_srcidx = tensors(tgt_test, index_src)
    vec_tgt_train_tgtidx = tensors(tgt_train, index_tgt)
    vec_tgt_test_tgtidx = tensors(tgt_test, index_tgt)

    def make_encoder(hint_dim: int, offset: int) -> TypeEncoder:
        params = EncoderParams(
            embed_dim=cfg.embed_dim,
            ident_hidden=cfg.ident_hidden,
            ctx_hidden=cfg.ctx_hidden,
            dense_dim=cfg.dense_dim,
            hint_dim=hint_dim,
            margin=cfg.margin,
            ident_len=cfg.ident_len,
            ctx_len=cfg.ctx_len,
        )
        return TypeEncoder(params, embedding.vectors, seed=seed * 10 + offset)

    results: dict[str, dict] = {}
    actuals = [s.label for s in tgt_test]

    def evaluate(name: str, encoder: TypeEncoder, train_batch, test_batch) -> list[str]:
        cluster = build_type_cluster(encoder, train_batch, cfg.knn_k)
        preds = predict_batch(encoder, test_batch, cluster)
        pairs = list(zip(preds, actuals))
        results[name] = {
            "slices": eval_mod.slice_metrics(pairs, tgt_space, cluster.label_set),
            "predictable_removed_fraction": eval_mod.filter_predictable(
                actuals, cluster.label_set
            ).removed_fraction,
        }
        if checkpoint_dir is not None:
            index = index_tgt if name == "indomain" else index_src
            save_checkpoint(
                checkpoint_dir / f"checkpoint_{name}.npz", encoder, index, cluster
            )
        return preds

    # cross-domain baseline
    enc_cross = make_encoder(len(index_src), 0)
    train(
        enc_cross, vec_src_train, epochs=cfg.epochs, lr=cfg.learning_rate,
        batch_size=cfg.batch_size, seed=seed,
    )
    evaluate("cross", enc_cross, vec_src_train, vec_tgt_test_srcidx)

    # in-domain comparison
    enc_in = make_encoder(len(index_tgt), 1)
    train(
        enc_in, vec_tgt_train_tgtidx, epochs=cfg.epochs, lr=cfg.learning_rate,
        batch_size=cfg.batch_size, seed=seed,
    )
    evaluate("indomain", enc_in, vec_tgt_train_tgtidx, vec_tgt_test_tgtidx)

    encoders: dict[str, TypeEncoder] = {"cross": enc_cross, "indomain": enc_in}
    wd_history: list[float] = []

    if "dann" in cfg.adaptations:
        enc = make_encoder(len(index_src), 2)
        dann_train(
            enc, vec_src_train, vec_tgt_train_srcidx, epochs=cfg.epochs,
            lr=cfg.learning_rate, batch_size=cfg.batch_size, seed=seed,
        )
        evaluate("dann", enc, vec_src_train, vec_tgt_test_srcidx)
        encoders["dann"] = enc

    if "wdgrl" in cfg.adaptations:
        enc = make_encoder(len(index_src), 3)
        _, wd_history = wdgrl_train(
            enc, vec_src_train, vec_tgt_train_srcidx, epochs=cfg.epochs,
            lr=cfg.learning_rate, batch_size=cfg.batch_size, seed=seed,
            critic_steps=cfg.wdgrl_critic_steps,
            penalty_weight=cfg.wdgrl_penalty_weight,
        )
        evaluate("wdgrl", enc, vec_src_train, vec_tgt_test_srcidx)
        encoders["wdgrl"] = enc

    if "finetune" in cfg.adaptations:
        enc = copy.deepcopy(enc_cross)
        fine_tune(
            enc, vec_tgt_train_srcidx, epochs=cfg.epochs, lr=cfg.learning_rate,
            batch_size=cfg.batch_size, seed=seed,
        )
        # the cluster is rebuilt from the target training samples
        evaluate("finetune", enc, vec_tgt_train_srcidx, vec_tgt_test_srcidx)
        encoders["finetune"] = enc

    # covariate probes on encoder features
    rng = np.random.default_rng([cfg.probe_seed, seed])
    idx_src = _subsample(rng, len(vec_src_train), cfg.probe_max_per_side)
    idx_tgt_test = _subsample(rng, len(vec_tgt_test_srcidx), cfg.probe_max_per_side)
    idx_tgt_train = _subsample(rng, len(vec_tgt_train_tgtidx), cfg.probe_max_per_side)

    probes: dict[str, float] = {}
    for name in ("cross", "dann", "wdgrl"):
        if name not in encoders:
            continue
        enc = encoders[name]
        f_a = enc.encode_eval(vec_src_train.take(idx_src))
        f_b = enc.encode_eval(vec_tgt_test_srcidx.take(idx_tgt_test))
        probes[name] = eval_mod.covariate_probe(f_a, f_b, seed=cfg.probe_seed).probe_f1
    f_a = enc_in.encode_eval(vec_tgt_train_tgtidx.take(idx_tgt_train))
    f_b = enc_in.encode_eval(vec_tgt_test_tgtidx.take(idx_tgt_test))
    probes["indomain"] = eval_mod.covariate_probe(f_a, f_b, seed=cfg.probe_seed).probe_f1

    return {
        "seed": seed,
        "conditions": results,
        "probes": probes,
        "wd_estimates": wd_history,
        "visible_overlap": eval_mod.visible_hint_overlap(index_src, index_tgt),
        "index_sizes": {"source": len(index_src), "target": len(index_tgt)},
    }


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------

def run_pipeline(cfg: ExperimentConfig, workdir: str | Path | None = None) -> dict:
    """Run every stage and return the aggregated report (also on disk)."""
    torch.set_num_threads(1)
    workdir = default_workdir() if workdir is None else Path(workdir)
    stages = _Stages(cfg, workdir)
    cfg_key = cfg.to_dict()
    cfg_digest = stages.cfg_hash

    # 1. fixture corpora
    fixture_key = {"spec": asdict(cfg.fixture), "seed": cfg.fixture_seed}
    fixture_dir = stages.run(
        "fixture", fixture_key, lambda out: generate_fixture(cfg.fixture, cfg.fixture_seed, out)
    )

    def corpus_files(domain: str) -> list[tuple[str, str]]:
        files = []
        for path in sorted((fixture_dir / domain).rglob("*.py")):
            rel = path.relative_to(fixture_dir)
            files.append((str(rel), path.read_text(encoding="utf-8")))
        return files

    domains = sorted({cfg.source_domain, cfg.target_domain})

    # 2. dedup
    dedup_key = {
        "fixture": fixture_key,
        "threshold": cfg.dedup_threshold,
        "k": cfg.dedup_k,
        "seed": cfg.dedup_seed,
    }

    def build_dedup(out: Path) -> None:
        files_a = corpus_files(domains[0])
        files_b = corpus_files(domains[1])
        kept_a, kept_b, clusters = dedup_mod.dedup_corpora(
            files_a, files_b, cfg.dedup_threshold, cfg.dedup_k, cfg.dedup_seed
        )
        dedup_mod.write_manifest(clusters, out / "manifest.csv")
        _dump_json(
            out / "kept.json",
            {domains[0]: sorted(kept_a), domains[1]: sorted(kept_b)},
        )

    dedup_dir = stages.run("dedup", dedup_key, build_dedup)
    kept = json.loads((dedup_dir / "kept.json").read_text(encoding="utf-8"))

    # 3. split
    split_key = {"fixture": fixture_key, "seed": cfg.split_seed}

    def build_split(out: Path) -> None:
        for domain in domains:
            projects = sorted(
                f"{p.name.split('__')[0]}/{p.name.split('__')[1]}"
                for p in (fixture_dir / domain).iterdir()
                if p.is_dir()
            )
            assignment = extract_mod.split_projects(projects, cfg.split_seed)
            with (out / f"split_{domain}.csv").open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["project", "split"])
                for project in sorted(assignment.assignment):
                    writer.writerow([project, assignment.assignment[project]])

    split_dir = stages.run("split", split_key, build_split)

    def read_split(domain: str) -> dict[str, str]:
        out = {}
        with (split_dir / f"split_{domain}.csv").open("r", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                out[row["project"]] = row["split"]
        return out

    # 4. extract
    extract_key = {"dedup": dedup_key, "split": split_key}

    def build_extract(out: Path) -> None:
        for domain in domains:
            splits = read_split(domain)
            kept_ids = set(kept[domain])
            records = []
            skipped = []
            for proj_dir in sorted((fixture_dir / domain).iterdir()):
                if not proj_dir.is_dir():
                    continue
                author, repo = proj_dir.name.split("__", 1)
                for path in sorted(proj_dir.rglob("*.py")):
                    file_id = str(path.relative_to(fixture_dir))
                    if file_id not in kept_ids:
                        continue
                    rel = str(path.relative_to(proj_dir))
                    try:
                        records.append(
                            extract_mod.extract_module(
                                rel,
                                path.read_text(encoding="utf-8"),
                                author,
                                repo,
                                set_tag=splits[f"{author}/{repo}"],
                            )
                        )
                    except extract_mod.ExtractError as exc:
                        skipped.append((file_id, str(exc)))
            extract_mod.write_dataset(records, out / f"dataset_{domain}.jsonl")
            with (out / f"skipped_{domain}.csv").open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["file_id", "reason"])
                writer.writerows(skipped)

    extract_dir = stages.run("extract", extract_key, build_extract)

    # 5. samples
    samples_key = {"extract": extract_key}

    def build_samples(out: Path) -> None:
        alias = norm_mod.load_alias_table()
        qualify = norm_mod.load_qualify_table()
        report_rows = []
        for domain in domains:
            records = extract_mod.read_dataset(extract_dir / f"dataset_{domain}.jsonl")
            records = norm_mod.drop_trivial_functions(records)
            stats: dict[str, int] = {}
            sample_list = samples_from_records(
                records, alias, qualify, domain_tag=domain, stats=stats
            )
            splits = read_split(domain)
            _write_samples(out / f"samples_{domain}.jsonl", sample_list, splits)
            for reason in sorted(stats):
                report_rows.append([domain, reason, stats[reason]])
        with (out / "normalization_report.csv").open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["domain", "reason", "count"])
            writer.writerows(report_rows)

    samples_dir = stages.run("samples", samples_key, build_samples)

    samples: dict[tuple[str, str], list[TypeSample]] = {
        (d, s): [] for d in domains for s in ("train", "valid", "test")
    }
    for domain in domains:
        for sample, split in _read_samples(samples_dir / f"samples_{domain}.jsonl"):
            samples[(domain, split)].append(sample)

    # 6. embeddings per regime + OOV reports
    embed_key = {
        "samples": samples_key,
        "dim": cfg.embed_dim,
        "window": cfg.embed_window,
        "min_count": cfg.embed_min_count,
        "epochs": cfg.embed_epochs,
        "seed": cfg.embed_seed,
        "source": cfg.source_domain,
    }

    def module_sentences(domain: str, splits: tuple[str, ...]) -> list[list[str]]:
        records = extract_mod.read_dataset(extract_dir / f"dataset_{domain}.jsonl")
        return [model_tokens(r.untyped_seq) for r in records if r.set in splits]

    def sample_streams(group: list[TypeSample]) -> list[list[str]]:
        return [s.identifier_tokens + s.context_tokens for s in group]

    def build_embed(out: Path) -> None:
        src, tgt = cfg.source_domain, cfg.target_domain
        corpora = {
            "source": module_sentences(src, ("train",)),
            "both": module_sentences(src, ("train",)) + module_sentences(tgt, ("train",)),
            "all": module_sentences(src, ("train", "valid", "test"))
            + module_sentences(tgt, ("train", "valid", "test")),
        }
        reports = []
        for regime, sentences in corpora.items():
            model = emb_mod.train_embedding(
                sentences,
                dim=cfg.embed_dim,
                window=cfg.embed_window,
                min_count=cfg.embed_min_count,
                seed=cfg.embed_seed,
                epochs=cfg.embed_epochs,
                corpus_id=regime,
            )
            emb_mod.save_embedding(model, out / regime)
            for corpus_name, group in (
                (f"{src}_test", samples[(src, "test")]),
                (f"{tgt}_test", samples[(tgt, "test")]),
            ):
                reports.append(
                    emb_mod.oov_report(
                        model, sample_streams(group), corpus_id=f"{regime}:{corpus_name}"
                    )
                )
        emb_mod.write_oov_reports(reports, out / "oov.csv")

    embed_dir = stages.run("embed", embed_key, build_embed)
    embedding = emb_mod.load_embedding(embed_dir / cfg.embedding_regime)

    # 7. per-seed runs
    run_results = []
    for seed in cfg.seeds:
        run_key = {"embed": embed_key, "model": cfg_key, "seed": seed}

        def build_run(out: Path, seed: int = seed) -> None:
            result = run_experiment(cfg, seed, samples, embedding, checkpoint_dir=out)
            _dump_json(out / "metrics.json", result)

        run_dir = stages.run(f"run_{seed}", run_key, build_run)
        run_results.append(
            json.loads((run_dir / "metrics.json").read_text(encoding="utf-8"))
        )

    # 8. report
    report_dir = workdir / "report" / cfg_digest
    report = _build_report(cfg, cfg_digest, run_results, embed_dir, samples, report_dir)
    return report


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------

def _agg(values: list[float | None]) -> dict | None:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    arr = np.asarray(vals, dtype=np.float64)
    return {
        "mean_pct": float(arr.mean() * 100),
        "std_pct": float(arr.std(ddof=1) * 100) if len(arr) > 1 else 0.0,
        "runs": [float(v) for v in vals],
    }


def _build_report(
    cfg: ExperimentConfig,
    cfg_digest: str,
    run_results: list[dict],
    embed_dir: Path,
    samples: dict[tuple[str, str], list[TypeSample]],
    out_dir: Path,
) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    src, tgt = cfg.source_domain, cfg.target_domain

    conditions = sorted({c for r in run_results for c in r["conditions"]})
    slices: dict[str, dict[str, dict | None]] = {}
    for cond in conditions:
        slices[cond] = {}
        for slice_name in eval_mod.SLICE_NAMES:
            slices[cond][slice_name] = _agg(
                [r["conditions"][cond]["slices"][slice_name] for r in run_results]
            )

    def runs_of(cond: str, slice_name: str = "all") -> list[float]:
        return [
            r["conditions"][cond]["slices"][slice_name]
            for r in run_results
            if r["conditions"][cond]["slices"][slice_name] is not None
        ]

    significance: dict[str, dict] = {}
    if "cross" in conditions and "indomain" in conditions:
        res = eval_mod.significance(runs_of("indomain"), runs_of("cross"))
        significance["indomain_vs_cross"] = asdict(res)
    for cond in conditions:
        if cond in ("cross", "indomain"):
            continue
        res = eval_mod.significance(runs_of(cond), runs_of("cross"))
        significance[f"{cond}_vs_cross"] = asdict(res)

    probes = {
        name: {
            "runs": [r["probes"][name] for r in run_results if name in r["probes"]],
        }
        for name in sorted({n for r in run_results for n in r["probes"]})
    }
    for entry in probes.values():
        entry["mean"] = float(np.mean(entry["runs"])) if entry["runs"] else None

    prior = eval_mod.prior_shift_report(
        [s.label for s in samples[(src, "train")]],
        [s.label for s in samples[(tgt, "test")]],
    )

    dist = eval_mod.distribution_report(
        {
            domain: [
                s.label
                for split in ("train", "valid", "test")
                for s in samples[(domain, split)]
            ]
            for domain in (src, tgt)
        }
    )
    eval_mod.write_distribution_report(dist, out_dir)

    oov_rows = []
    with (embed_dir / "oov.csv").open("r", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            oov_rows.append(row)

    report = {
        "name": cfg.name,
        "config_hash": cfg_digest,
        "config": cfg.to_dict(),
        "setup": {"source": src, "target": tgt, "seeds": list(cfg.seeds)},
        "f1": slices,
        "significance": significance,
        "probes": probes,
        "prior_shift": asdict(prior),
        "visible_overlap": run_results[0]["visible_overlap"],
        "index_sizes": run_results[0]["index_sizes"],
        "oov": oov_rows,
        "wd_estimates": [r["wd_estimates"] for r in run_results],
        "predictable_removed_fraction": {
            cond: [r["conditions"][cond]["predictable_removed_fraction"] for r in run_results]
            for cond in conditions
        },
        "runs": run_results,
    }
    (out_dir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=1), encoding="utf-8"
    )

    with (out_dir / "results_f1.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "slice", "mean_pct", "std_pct", "config_hash"])
        for cond in conditions:
            for slice_name in eval_mod.SLICE_NAMES:
                agg = slices[cond][slice_name]
                writer.writerow(
                    [
                        cond,
                        slice_name,
                        "" if agg is None else f"{agg['mean_pct']:.2f}",
                        "" if agg is None else f"{agg['std_pct']:.2f}",
                        cfg_digest,
                    ]
                )

    with (out_dir / "probe.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["features", "mean_f1", "config_hash"])
        for name in sorted(probes):
            mean = probes[name]["mean"]
            writer.writerow([name, "" if mean is None else f"{mean:.4f}", cfg_digest])

    with (embed_dir / "oov.csv").open("r", encoding="utf-8") as src_fh:
        (out_dir / "oov.csv").write_text(src_fh.read(), encoding="utf-8")

    _write_adaptation_chart(slices, out_dir / "adaptation.png")
    return report


def _write_adaptation_chart(slices: dict, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    order = [c for c in CONDITIONS if c in slices]
    means = []
    stds = []
    for cond in order:
        agg = slices[cond]["all"]
        means.append(agg["mean_pct"] if agg else 0.0)
        stds.append(agg["std_pct"] if agg else 0.0)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(order, means, yerr=stds, capsize=4)
    ax.set_ylabel("weighted F1 (%) on target test")
    ax.set_title("adaptation methods vs baselines")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
