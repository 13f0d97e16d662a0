"""Repository mining: dependents discovery, domain intersection, snapshots.

Repositories depending on a type checker plus one of two domain-marker
libraries are discovered from dependency pages, ranked by stars and
intersected into domain subsets. All page fetches go through a cache
directory keyed by URL hash so mining is reproducible offline; live
scraping is opt-in.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

__all__ = [
    "RepoRef",
    "MiningConfig",
    "MiningError",
    "ConfigError",
    "NetworkUnreachable",
    "RateLimited",
    "SnapshotError",
    "HashNotFound",
    "RepoListParseError",
    "PageCache",
    "discover_dependents",
    "sort_by_stars",
    "merge_and_intersect",
    "snapshot",
    "export_repo_list",
    "import_repo_list",
    "UNPINNED_HASH",
]

COMMIT_RE = re.compile(r"^[0-9a-f]{40}$")

# placeholder for refs discovered before a commit is pinned; still a valid
# 40-char lowercase hex string
UNPINNED_HASH = "0" * 40

DOMAINS = ("web", "cal", "both")


class MiningError(Exception):
    pass


class ConfigError(MiningError):
    pass


class NetworkUnreachable(MiningError):
    retryable = True


class RateLimited(MiningError):
    def __init__(self, message: str, retry_after: float = 1.0):
        super().__init__(message)
        self.retry_after = retry_after


class SnapshotError(MiningError):
    pass


class HashNotFound(SnapshotError):
    pass


class RepoListParseError(MiningError):
    pass


@dataclass(frozen=True)
class RepoRef:
    """One mined repository, pinned to a commit."""

    url: str
    commit_hash: str = UNPINNED_HASH
    stars: int = 0
    frameworks: frozenset[str] = frozenset()
    domain: str = ""

    def __post_init__(self):
        if not COMMIT_RE.match(self.commit_hash):
            raise ValueError(f"bad commit hash: {self.commit_hash!r}")
        if self.stars < 0:
            raise ValueError("stars must be non-negative")
        if self.domain and self.domain not in DOMAINS:
            raise ValueError(f"bad domain: {self.domain!r}")
        object.__setattr__(self, "frameworks", frozenset(self.frameworks))

    def with_(self, **kwargs) -> "RepoRef":
        current = {
            "url": self.url,
            "commit_hash": self.commit_hash,
            "stars": self.stars,
            "frameworks": self.frameworks,
            "domain": self.domain,
        }
        current.update(kwargs)
        return RepoRef(**current)


@dataclass
class MiningConfig:
    """Mining knobs plus the framework role mapping."""

    per_framework_limit: int = 50_000
    star_filter_min: int = 0
    page_cache_dir: str | Path = ".typelab_pages"
    request_delay: float = 1.0
    type_checker: str = "mypy"
    marker_cal: str = "numpy"
    marker_web: str = "flask"
    dependents_urls: dict[str, str] = field(default_factory=dict)
    allow_network: bool = False

    def __post_init__(self):
        if self.per_framework_limit < 1:
            raise ConfigError("per_framework_limit must be >= 1")

    @property
    def framework_ids(self) -> tuple[str, str, str]:
        return (self.type_checker, self.marker_cal, self.marker_web)

    def dependents_url(self, framework: str) -> str:
        if framework in self.dependents_urls:
            return self.dependents_urls[framework]
        return f"https://github.com/search/{framework}/network/dependents"


# ---------------------------------------------------------------------------
# fetch-or-cache
# ---------------------------------------------------------------------------

class _RateLimiter:
    def __init__(self, delay: float):
        self.delay = delay
        self._lock = threading.Lock()
        self._last = 0.0

    def wait(self) -> None:
        with self._lock:
            now = time.monotonic()
            remaining = self._last + self.delay - now
            if remaining > 0:
                time.sleep(remaining)
            self._last = time.monotonic()


class PageCache:
    """Raw page snapshots, keyed by the sha256 of the URL."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def path_for(self, url: str) -> Path:
        key = hashlib.sha256(url.encode("utf-8")).hexdigest()
        return self.directory / f"{key}.page"

    def get(self, url: str) -> str | None:
        path = self.path_for(url)
        if path.exists():
            return path.read_text(encoding="utf-8")
        return None

    def put(self, url: str, body: str) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        self.path_for(url).write_text(body, encoding="utf-8")


def _live_fetch(url: str, limiter: _RateLimiter) -> str:
    import os

    import requests

    limiter.wait()
    headers = {}
    token = os.environ.get("TYPELAB_FORGE_TOKEN")
    if token:
        headers["Authorization"] = f"token {token}"
    try:
        resp = requests.get(url, timeout=30, headers=headers)
    except requests.RequestException as exc:
        raise NetworkUnreachable(f"fetch failed for {url}: {exc}") from exc
    if resp.status_code == 429:
        retry_after = float(resp.headers.get("Retry-After", "60"))
        raise RateLimited(f"rate limited on {url}", retry_after=retry_after)
    if resp.status_code >= 400:
        raise NetworkUnreachable(f"HTTP {resp.status_code} for {url}")
    return resp.text


def make_fetcher(cfg: MiningConfig) -> Callable[[str], str]:
    """Cache-first fetcher; live requests only when the config allows them."""
    cache = PageCache(cfg.page_cache_dir)
    limiter = _RateLimiter(cfg.request_delay)

    def fetch(url: str) -> str:
        body = cache.get(url)
        if body is not None:
            return body
        if not cfg.allow_network:
            raise NetworkUnreachable(
                f"no cached page for {url} and live scraping is disabled"
            )
        for attempt in range(3):
            try:
                body = _live_fetch(url, limiter)
                break
            except RateLimited as exc:
                if attempt == 2:
                    raise
                time.sleep(exc.retry_after)
        cache.put(url, body)
        return body

    return fetch


# ---------------------------------------------------------------------------
# dependents pages
# ---------------------------------------------------------------------------

_HTML_ROW_RE = re.compile(
    r'<div[^>]*class="[^"]*dependent[^"]*"[^>]*>.*?'
    r'href="(?P<url>[^"]+)".*?'
    r'class="[^"]*stars[^"]*"[^>]*>\s*(?P<stars>[\d,]+)',
    re.DOTALL,
)
_HTML_NEXT_RE = re.compile(r'<a[^>]*rel="next"[^>]*href="([^"]+)"')


def _parse_page(body: str) -> tuple[list[dict], str | None]:
    """Parse one dependents page (JSON API shape or scraped HTML)."""
    stripped = body.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(body)
        repos = doc["repositories"]
        if not isinstance(repos, list):
            raise ValueError("repositories must be a list")
        return repos, doc.get("next")
    entries = []
    for m in _HTML_ROW_RE.finditer(body):
        url = m.group("url")
        if url.startswith("/"):
            url = "https://github.com" + url
        if not url.endswith(".git"):
            url += ".git"
        entries.append({"url": url, "stars": int(m.group("stars").replace(",", ""))})
    next_m = _HTML_NEXT_RE.search(body)
    return entries, next_m.group(1) if next_m else None


def discover_dependents(
    framework: str,
    cfg: MiningConfig,
    fetch: Callable[[str], str] | None = None,
    stats: dict | None = None,
) -> list[RepoRef]:
    """Walk dependency pages for one framework and collect repo refs.

    Results are capped at the configured per-framework limit, deduplicated
    by URL in page order, and filtered by the minimum star count. Malformed
    pages are skipped and counted in ``stats['malformed_pages']``.
    """
    if framework not in cfg.framework_ids:
        raise ConfigError(f"unknown framework {framework!r}")
    if fetch is None:
        fetch = make_fetcher(cfg)
    if stats is None:
        stats = {}
    stats.setdefault("malformed_pages", 0)

    refs: list[RepoRef] = []
    seen: set[str] = set()
    url: str | None = cfg.dependents_url(framework)
    visited: set[str] = set()
    while url and url not in visited and len(refs) < cfg.per_framework_limit:
        visited.add(url)
        body = fetch(url)
        try:
            entries, next_url = _parse_page(body)
        except (ValueError, KeyError, TypeError, json.JSONDecodeError):
            stats["malformed_pages"] += 1
            break
        for entry in entries:
            if len(refs) >= cfg.per_framework_limit:
                break
            try:
                repo_url = entry["url"]
                stars = int(entry.get("stars", 0))
                commit = entry.get("hash") or UNPINNED_HASH
            except (KeyError, TypeError, ValueError):
                stats["malformed_pages"] += 1
                continue
            if repo_url in seen or stars < cfg.star_filter_min:
                continue
            seen.add(repo_url)
            refs.append(
                RepoRef(
                    url=repo_url,
                    commit_hash=commit,
                    stars=stars,
                    frameworks=frozenset({framework}),
                )
            )
        url = next_url
    return refs


def sort_by_stars(refs: Iterable[RepoRef]) -> list[RepoRef]:
    """Descending stars, URL-lexicographic on ties."""
    return sorted(refs, key=lambda r: (-r.stars, r.url))


def merge_and_intersect(
    per_framework: dict[str, list[RepoRef]],
    cfg: MiningConfig,
) -> dict[str, list[RepoRef]]:
    """Intersect checker dependents with each marker's dependents.

    cal = checker ∩ cal-marker, web = checker ∩ web-marker; repos depending
    on all three land in both subsets tagged domain=both. Star counts from
    different sources merge by taking the maximum seen.
    """
    for fw in cfg.framework_ids:
        if fw not in per_framework:
            raise ConfigError(f"missing framework key {fw!r}")

    merged: dict[str, RepoRef] = {}
    for fw, refs in per_framework.items():
        for ref in refs:
            prev = merged.get(ref.url)
            if prev is None:
                merged[ref.url] = ref.with_(frameworks=ref.frameworks | {fw})
            else:
                commit = prev.commit_hash
                if commit == UNPINNED_HASH:
                    commit = ref.commit_hash
                merged[ref.url] = prev.with_(
                    stars=max(prev.stars, ref.stars),
                    frameworks=prev.frameworks | ref.frameworks | {fw},
                    commit_hash=commit,
                )

    checker, cal_marker, web_marker = cfg.framework_ids
    out: dict[str, list[RepoRef]] = {"cal": [], "web": []}
    for url in sorted(merged):
        ref = merged[url]
        has_checker = checker in ref.frameworks
        in_cal = has_checker and cal_marker in ref.frameworks
        in_web = has_checker and web_marker in ref.frameworks
        domain = "both" if (in_cal and in_web) else ("cal" if in_cal else "web")
        if in_cal:
            out["cal"].append(ref.with_(domain=domain))
        if in_web:
            out["web"].append(ref.with_(domain=domain))
    out["cal"] = sort_by_stars(out["cal"])
    out["web"] = sort_by_stars(out["web"])
    return out


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def _run_git(args: Sequence[str], cwd: Path | None = None) -> str:
    proc = subprocess.run(
        ["git", *args],
        cwd=cwd,
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise SnapshotError(f"git {' '.join(args)} failed: {proc.stderr.strip()}")
    return proc.stdout.strip()


def _checkout_dir(ref: RepoRef, workdir: Path) -> Path:
    tail = ref.url.rstrip("/").removesuffix(".git")
    parts = [p for p in tail.split("/") if p][-2:]
    return workdir / "__".join(parts)


def snapshot(ref: RepoRef, workdir: str | Path) -> Path:
    """Materialize the repo's working tree exactly at the pinned commit.

    Idempotent: when the checkout already sits at the commit nothing is
    cloned or fetched again.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    dest = _checkout_dir(ref, workdir)

    if (dest / ".git").exists():
        head = _run_git(["rev-parse", "HEAD"], cwd=dest)
        if head == ref.commit_hash:
            return dest
    else:
        proc = subprocess.run(
            ["git", "clone", ref.url, str(dest)], capture_output=True, text=True
        )
        if proc.returncode != 0:
            raise SnapshotError(f"clone of {ref.url} failed: {proc.stderr.strip()}")

    check = subprocess.run(
        ["git", "cat-file", "-e", f"{ref.commit_hash}^{{commit}}"],
        cwd=dest,
        capture_output=True,
        text=True,
    )
    if check.returncode != 0:
        raise HashNotFound(f"{ref.commit_hash} not in history of {ref.url}")
    _run_git(["checkout", "--quiet", ref.commit_hash], cwd=dest)
    return dest


# ---------------------------------------------------------------------------
# repo-list CSV
# ---------------------------------------------------------------------------

_CSV_HEADER = ["url", "hash", "stars", "frameworks", "domain"]


def export_repo_list(refs: Sequence[RepoRef], path: str | Path) -> None:
    urls = [r.url for r in refs]
    if len(urls) != len(set(urls)):
        raise ValueError("duplicate URLs in repo list")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for r in refs:
            writer.writerow(
                [r.url, r.commit_hash, r.stars, ";".join(sorted(r.frameworks)), r.domain]
            )


def import_repo_list(path: str | Path) -> list[RepoRef]:
    refs = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _CSV_HEADER:
            raise RepoListParseError(f"bad header {header!r}, expected {_CSV_HEADER}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(_CSV_HEADER):
                raise RepoListParseError(f"line {line_no}: expected 5 columns, got {len(row)}")
            url, commit, stars, frameworks, domain = row
            try:
                ref = RepoRef(
                    url=url,
                    commit_hash=commit,
                    stars=int(stars),
                    frameworks=frozenset(f for f in frameworks.split(";") if f),
                    domain=domain,
                )
            except ValueError as exc:
                raise RepoListParseError(f"line {line_no}: {exc}") from exc
            refs.append(ref)
    return refs
