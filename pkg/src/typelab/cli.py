"""Command-line interface.

Artifact-level verbs (mine, intersect, snapshot, dedup, split, extract,
normalize, predict) operate on explicit files; experiment verbs (fixture,
embed, train, adapt, evaluate, probe-shift, report, run) drive the cached
pipeline from a config file.

Exit codes: 0 ok, 2 configuration error, 3 stage failure, 4 check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_CHECK = 4


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="experiment config YAML")
    p.add_argument("--workdir", type=Path, default=None, help="cache/work directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="typelab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="discover dependents of one framework")
    p.add_argument("--framework", required=True)
    p.add_argument("--limit", type=int, default=50_000)
    p.add_argument("--cache", type=Path, required=True, help="page cache directory")
    p.add_argument("--star-min", type=int, default=0)
    p.add_argument("--url", default=None, help="dependents start URL")
    p.add_argument("--allow-network", action="store_true")
    p.add_argument("--out", type=Path, required=True, help="output repo-list CSV")

    p = sub.add_parser("intersect", help="merge per-framework lists into domain subsets")
    p.add_argument(
        "--list",
        dest="lists",
        action="append",
        required=True,
        metavar="FRAMEWORK=CSV",
    )
    p.add_argument("--checker", default="mypy")
    p.add_argument("--marker-cal", default="numpy")
    p.add_argument("--marker-web", default="flask")
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("snapshot", help="materialize pinned working trees")
    p.add_argument("--repo-list", type=Path, required=True)
    p.add_argument("--workdir", type=Path, required=True)

    p = sub.add_parser("dedup", help="near-duplicate removal across two corpora")
    p.add_argument("--corpus-a", type=Path, required=True)
    p.add_argument("--corpus-b", type=Path, required=True)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("split", help="project-level train/valid/test split")
    p.add_argument("--projects-dir", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="split manifest CSV")

    p = sub.add_parser("extract", help="parse snapshots into module records")
    p.add_argument("--snapshot", type=Path, required=True, help="dir of author__repo trees")
    p.add_argument("--out", type=Path, required=True, help="dataset JSONL")
    p.add_argument("--split-manifest", type=Path, default=None)

    p = sub.add_parser("normalize", help="dataset records -> normalized samples")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--domain", default="")
    p.add_argument("--out", type=Path, required=True, help="samples JSONL")
    p.add_argument("--report", type=Path, default=None, help="drop-count CSV")

    p = sub.add_parser("predict", help="rank types for samples with a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--samples", type=Path, required=True)
    p.add_argument("--embedding", type=Path, required=True, help="embedding directory")
    p.add_argument("--top", type=int, default=1)

    for name, help_text in (
        ("fixture", "generate the synthetic two-domain corpora"),
        ("embed", "train embedding regimes and the OOV report"),
        ("train", "train per-seed models (plus adaptations)"),
        ("adapt", "alias of train (adaptations are part of the run matrix)"),
        ("evaluate", "full pipeline through evaluation"),
        ("probe-shift", "print the covariate-probe section"),
        ("report", "full pipeline; print the report path"),
        ("run", "full pipeline end to end"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_config_args(p)
        if name == "adapt":
            p.add_argument("--method", choices=["dann", "wdgrl", "finetune"], default=None)
        if name in ("run", "report", "evaluate"):
            p.add_argument("--check", action="store_true", help="verify report invariants")

    return parser


# ---------------------------------------------------------------------------
# artifact verbs
# ---------------------------------------------------------------------------

def _cmd_mine(args) -> int:
    from .repos import MiningConfig, discover_dependents, export_repo_list, sort_by_stars

    urls = {args.framework: args.url} if args.url else {}
    cfg = MiningConfig(
        per_framework_limit=args.limit,
        star_filter_min=args.star_min,
        page_cache_dir=args.cache,
        dependents_urls=urls,
        allow_network=args.allow_network,
    )
    if args.framework not in cfg.framework_ids:
        cfg.type_checker = args.framework  # mine any framework id standalone
    stats: dict = {}
    refs = sort_by_stars(discover_dependents(args.framework, cfg, stats=stats))
    export_repo_list(refs, args.out)
    print(f"mined {len(refs)} repos ({stats.get('malformed_pages', 0)} malformed pages)")
    return EXIT_OK


def _cmd_intersect(args) -> int:
    from .repos import MiningConfig, export_repo_list, import_repo_list, merge_and_intersect

    per_framework = {}
    for item in args.lists:
        if "=" not in item:
            raise ValueError(f"--list expects FRAMEWORK=CSV, got {item!r}")
        framework, path = item.split("=", 1)
        per_framework[framework] = import_repo_list(path)
    cfg = MiningConfig(
        type_checker=args.checker, marker_cal=args.marker_cal, marker_web=args.marker_web
    )
    out = merge_and_intersect(per_framework, cfg)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for domain, refs in out.items():
        export_repo_list(refs, args.out_dir / f"{domain}.csv")
        print(f"{domain}: {len(refs)} repos")
    return EXIT_OK


def _cmd_snapshot(args) -> int:
    from .repos import import_repo_list, snapshot

    refs = import_repo_list(args.repo_list)
    for ref in refs:
        dest = snapshot(ref, args.workdir)
        print(f"{ref.url} -> {dest}")
    return EXIT_OK


def _cmd_dedup(args) -> int:
    from .dedup import dedup_corpora, write_manifest

    def gather(root: Path) -> list[tuple[str, str]]:
        return [
            (str(p.relative_to(root.parent)), p.read_text(encoding="utf-8", errors="replace"))
            for p in sorted(root.rglob("*.py"))
        ]

    kept_a, kept_b, clusters = dedup_corpora(
        gather(args.corpus_a), gather(args.corpus_b), args.threshold, args.k, args.seed
    )
    args.out.mkdir(parents=True, exist_ok=True)
    write_manifest(clusters, args.out / "manifest.csv")
    (args.out / "kept.json").write_text(
        json.dumps({"a": sorted(kept_a), "b": sorted(kept_b)}, indent=1), encoding="utf-8"
    )
    print(f"kept {len(kept_a)} + {len(kept_b)} files in {len(clusters)} clusters")
    return EXIT_OK


def _cmd_split(args) -> int:
    from .extract import split_projects

    projects = sorted(p.name for p in args.projects_dir.iterdir() if p.is_dir())
    assignment = split_projects(projects, args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["project", "split"])
        for project in sorted(assignment.assignment):
            writer.writerow([project, assignment.assignment[project]])
    print(f"split {len(projects)} projects -> {args.out}")
    return EXIT_OK


def _cmd_extract(args) -> int:
    from .extract import extract_project, write_dataset

    splits = {}
    if args.split_manifest:
        with args.split_manifest.open("r", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                splits[row["project"]] = row["split"]

    records = []
    total_skipped = 0
    for proj_dir in sorted(p for p in args.snapshot.iterdir() if p.is_dir()):
        author, _, repo = proj_dir.name.partition("__")
        tag = splits.get(proj_dir.name, splits.get(f"{author}/{repo}", ""))
        recs, skipped = extract_project(proj_dir, author, repo or proj_dir.name, tag)
        records.extend(recs)
        total_skipped += len(skipped)
    write_dataset(records, args.out)
    print(f"extracted {len(records)} modules ({total_skipped} skipped) -> {args.out}")
    return EXIT_OK


def _cmd_normalize(args) -> int:
    from .extract import read_dataset
    from .model import samples_from_records
    from .normalize import drop_trivial_functions, load_alias_table, load_qualify_table
    from .pipeline import _write_samples

    records = drop_trivial_functions(read_dataset(args.dataset))
    stats: dict = {}
    samples = samples_from_records(
        records, load_alias_table(), load_qualify_table(), domain_tag=args.domain, stats=stats
    )
    splits = {r.project_id: r.set or "train" for r in records}
    args.out.parent.mkdir(parents=True, exist_ok=True)
    _write_samples(args.out, samples, splits)
    if args.report:
        with args.report.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["reason", "count"])
            for reason in sorted(stats):
                writer.writerow([reason, stats[reason]])
    print(f"emitted {stats.get('emitted', 0)} samples -> {args.out}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    from .embeddings import load_embedding
    from .model import attach_hints, load_checkpoint, predict, vectorize
    from .pipeline import _read_samples

    encoder, index, cluster = load_checkpoint(args.checkpoint)
    embedding = load_embedding(args.embedding)
    samples = [s for s, _ in _read_samples(args.samples)]
    attach_hints(samples, index)
    batch = vectorize(
        samples, embedding.vocab, encoder.params.ident_len, encoder.params.ctx_len
    )
    queries = encoder.encode_eval(batch)
    writer = csv.writer(sys.stdout)
    writer.writerow(["sample", "rank", "type", "score"])
    for i, q in enumerate(queries):
        for rank, (label, score) in enumerate(predict(q, cluster)[: args.top], start=1):
            writer.writerow([i, rank, label, f"{score:.6f}"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# pipeline verbs
# ---------------------------------------------------------------------------

def _report_checks(report: dict) -> list[str]:
    """Pipeline-level guarantees that must hold for every run."""
    failures = []
    for run in report["runs"]:
        for cond, res in run["conditions"].items():
            s = res["slices"]
            if s["all"] is not None and s["predictable_all"] is not None:
                if s["predictable_all"] < s["all"] - 1e-12:
                    failures.append(
                        f"seed {run['seed']} {cond}: predictable F1 {s['predictable_all']:.4f}"
                        f" < all-types F1 {s['all']:.4f}"
                    )
    for name, entry in report["probes"].items():
        for value in entry["runs"]:
            if not 0.0 <= value <= 1.0:
                failures.append(f"probe {name} out of range: {value}")
    return failures


def _cmd_pipeline(args, command: str) -> int:
    from .config import load_config
    from .pipeline import run_pipeline, default_workdir

    cfg = load_config(args.config)
    if command == "adapt" and getattr(args, "method", None):
        cfg.adaptations = (args.method,)
    workdir = args.workdir if args.workdir else default_workdir()
    report = run_pipeline(cfg, workdir)
    report_path = Path(workdir) / "report" / report["config_hash"] / "report.json"

    if command in ("train", "adapt"):
        checkpoints = sorted(Path(workdir).glob("cache/run_*/*/checkpoint_*.npz"))
        for ckpt in checkpoints:
            print(f"checkpoint: {ckpt}")

    if command == "probe-shift":
        for name, entry in report["probes"].items():
            mean = entry["mean"]
            print(f"{name}: probe F1 {mean:.4f}" if mean is not None else f"{name}: n/a")
        return EXIT_OK

    if command in ("run", "report", "evaluate"):
        print(f"report: {report_path}")
        if getattr(args, "check", False):
            failures = _report_checks(report)
            for f in failures:
                print(f"CHECK FAILED: {f}", file=sys.stderr)
            if failures:
                return EXIT_CHECK
        f1 = report["f1"]
        for cond in sorted(f1):
            agg = f1[cond]["all"]
            if agg:
                print(f"  {cond:9s} all-types F1 {agg['mean_pct']:.2f} ± {agg['std_pct']:.2f}")
        return EXIT_OK

    print(f"report: {report_path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "mine":
            return _cmd_mine(args)
        if args.command == "intersect":
            return _cmd_intersect(args)
        if args.command == "snapshot":
            return _cmd_snapshot(args)
        if args.command == "dedup":
            return _cmd_dedup(args)
        if args.command == "split":
            return _cmd_split(args)
        if args.command == "extract":
            return _cmd_extract(args)
        if args.command == "normalize":
            return _cmd_normalize(args)
        if args.command == "predict":
            return _cmd_predict(args)
        return _cmd_pipeline(args, args.command)
    except Exception as exc:  # noqa: BLE001 - map to exit codes at the boundary
        from .pipeline import StageError
        from .repos import ConfigError

        if isinstance(exc, StageError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_STAGE
        if isinstance(exc, (ConfigError, ValueError, FileNotFoundError)):
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        raise


if __name__ == "__main__":
    sys.exit(main())
