"""Project-level dataset splitting and per-file feature extraction.

Each source file becomes one module record: a literal-normalized token
sequence with an aligned type-tag sequence, imports, annotated variables,
classes and functions (parameters, return expressions, usage windows,
docstring parts). Annotation strings are kept verbatim here; normalization
happens downstream.

Nested functions have no slot of their own in the record schema: their
annotated parameters and locals are merged into the enclosing function's
``variables`` map under dotted keys (``inner.x``), and their return
annotation under the bare inner name.
"""

from __future__ import annotations

import ast
import io
import json
import keyword
import tokenize
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "ExtractError",
    "SplitAssignment",
    "FunctionRecord",
    "ClassRecord",
    "ModuleRecord",
    "split_projects",
    "extract_module",
    "extract_project",
    "write_dataset",
    "read_dataset",
    "SPLIT_RATIOS",
    "OCCURRENCE_WINDOW",
]

SPLIT_RATIOS = (0.70, 0.10, 0.20)
SPLIT_NAMES = ("train", "valid", "test")

# usage windows are the 7 tokens centered on each parameter occurrence
OCCURRENCE_WINDOW = 7

NUMBER_TOKEN = "[number]"
STRING_TOKEN = "[string]"


class ExtractError(Exception):
    """File could not be tokenized or parsed under the supported grammar."""


# ---------------------------------------------------------------------------
# split
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitAssignment:
    """Deterministic project -> {train, valid, test} mapping."""

    assignment: dict[str, str]
    ratios: tuple[float, float, float] = SPLIT_RATIOS
    seed: int = 0

    def split_of(self, project_id: str) -> str:
        return self.assignment[project_id]

    def projects(self, split: str) -> list[str]:
        return sorted(p for p, s in self.assignment.items() if s == split)


def _apportion(n: int, ratios: tuple[float, float, float]) -> list[int]:
    # largest-remainder so every realized size is within one of its target
    quotas = [n * r for r in ratios]
    sizes = [int(q) for q in quotas]
    remainder = n - sum(sizes)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[:remainder]:
        sizes[i] += 1
    return sizes


def split_projects(
    projects: Iterable[str],
    seed: int,
    ratios: tuple[float, float, float] = SPLIT_RATIOS,
) -> SplitAssignment:
    """Shuffle whole projects into train/valid/test at the configured ratios.

    Splitting happens at project level, never file level, so a project's
    files can never leak across splits.
    """
    ids = sorted(set(projects))
    if len(ids) < 3:
        raise ValueError(f"need at least 3 projects to split, got {len(ids)}")
    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    sizes = _apportion(len(ids), ratios)
    assignment: dict[str, str] = {}
    start = 0
    for name, size in zip(SPLIT_NAMES, sizes):
        for pid in order[start : start + size]:
            assignment[pid] = name
        start += size
    return SplitAssignment(assignment, ratios, seed)


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

@dataclass
class FunctionRecord:
    name: str
    params: dict[str, str] = field(default_factory=dict)
    ret_exprs: list[str] = field(default_factory=list)
    ret_type: str = ""
    variables: dict[str, str] = field(default_factory=dict)
    params_occur: dict[str, list[list[str]]] = field(default_factory=dict)
    docstring: dict[str, str | None] = field(
        default_factory=lambda: {"func": None, "ret": None, "long_descr": None}
    )


@dataclass
class ClassRecord:
    name: str
    variables: dict[str, str] = field(default_factory=dict)
    funcs: list[FunctionRecord] = field(default_factory=list)

    def replace_funcs(self, funcs: list[FunctionRecord]) -> "ClassRecord":
        return ClassRecord(self.name, dict(self.variables), funcs)


@dataclass
class ModuleRecord:
    author: str
    repository: str
    file_path: str
    untyped_seq: list[str] = field(default_factory=list)
    typed_seq: list[str] = field(default_factory=list)
    imports: list[str] = field(default_factory=list)
    variables: dict[str, str] = field(default_factory=dict)
    classes: list[ClassRecord] = field(default_factory=list)
    funcs: list[FunctionRecord] = field(default_factory=list)
    set: str = ""

    @property
    def project_id(self) -> str:
        return f"{self.author}/{self.repository}"

    def replace(self, **kwargs) -> "ModuleRecord":
        return replace(self, **kwargs)

    def all_funcs(self) -> Iterator[tuple[str | None, FunctionRecord]]:
        """Yields (owning class name or None, function record)."""
        for f in self.funcs:
            yield None, f
        for c in self.classes:
            for f in c.funcs:
                yield c.name, f

    def module_name(self) -> str:
        stem = Path(self.file_path).with_suffix("")
        return ".".join(p for p in stem.parts if p not in (".", ""))


# ---------------------------------------------------------------------------
# tokenization
# ---------------------------------------------------------------------------

_SKIP_TOKENS = frozenset(
    {
        tokenize.COMMENT,
        tokenize.NL,
        tokenize.NEWLINE,
        tokenize.INDENT,
        tokenize.DEDENT,
        tokenize.ENCODING,
        tokenize.ENDMARKER,
    }
)


@dataclass(frozen=True)
class _Tok:
    text: str
    row: int
    col: int
    is_identifier: bool


def _tokenize_source(source: str) -> list[_Tok]:
    toks: list[_Tok] = []
    try:
        for tok in tokenize.generate_tokens(io.StringIO(source).readline):
            if tok.type in _SKIP_TOKENS:
                continue
            if tok.type == tokenize.NUMBER:
                toks.append(_Tok(NUMBER_TOKEN, tok.start[0], tok.start[1], False))
            elif tok.type == tokenize.STRING:
                toks.append(_Tok(STRING_TOKEN, tok.start[0], tok.start[1], False))
            elif tok.type == tokenize.NAME:
                ident = not keyword.iskeyword(tok.string)
                toks.append(_Tok(tok.string, tok.start[0], tok.start[1], ident))
            elif tok.type == tokenize.OP:
                toks.append(_Tok(tok.string, tok.start[0], tok.start[1], False))
            elif tok.type == tokenize.ERRORTOKEN:
                raise ExtractError(f"stray token {tok.string!r} at line {tok.start[0]}")
    except (tokenize.TokenError, IndentationError) as exc:
        raise ExtractError(f"tokenization failed: {exc}") from exc
    return toks


# ---------------------------------------------------------------------------
# AST walk
# ---------------------------------------------------------------------------

def _segment(source: str, node: ast.AST | None) -> str:
    if node is None:
        return ""
    text = ast.get_source_segment(source, node)
    if text is None:
        return ast.unparse(node)
    return text.strip()


def _docstring_parts(node: ast.AST) -> dict[str, str | None]:
    doc = ast.get_docstring(node)
    if not doc:
        return {"func": None, "ret": None, "long_descr": None}
    lines = doc.strip().splitlines()
    func = lines[0].strip() if lines else None
    rest = "\n".join(lines[1:]).strip() or None
    ret = None
    for i, line in enumerate(lines):
        stripped = line.strip()
        low = stripped.lower()
        if low.startswith(":return:") or low.startswith(":returns:"):
            ret = stripped.split(":", 2)[-1].strip() or None
            break
        if low in ("returns:", "returns") and i + 1 < len(lines):
            ret = lines[i + 1].strip() or None
            break
    return {"func": func, "ret": ret, "long_descr": rest}


def _collect_args(node: ast.FunctionDef | ast.AsyncFunctionDef) -> list[ast.arg]:
    a = node.args
    return [*a.posonlyargs, *a.args, *(([a.vararg]) if a.vararg else []),
            *a.kwonlyargs, *(([a.kwarg]) if a.kwarg else [])]


def _function_record(
    node: ast.FunctionDef | ast.AsyncFunctionDef,
    source: str,
    annotation_points: dict[tuple[int, int], str],
) -> FunctionRecord:
    rec = FunctionRecord(name=node.name)
    rec.docstring = _docstring_parts(node)
    for arg in _collect_args(node):
        ann = _segment(source, arg.annotation)
        rec.params[arg.arg] = ann
        if arg.annotation is not None:
            annotation_points[(arg.lineno, arg.col_offset)] = ann
    rec.ret_type = _segment(source, node.returns)

    def collect_returns(stmts: list[ast.stmt]) -> None:
        for stmt in stmts:
            if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                continue  # nested scopes return for themselves
            if isinstance(stmt, ast.Return) and stmt.value is not None:
                rec.ret_exprs.append(_segment(source, stmt.value))
            collect_returns(
                [c for c in ast.iter_child_nodes(stmt) if isinstance(c, ast.stmt)]
            )

    collect_returns(node.body)

    # direct annotated locals; nested defs merge under dotted keys
    for stmt in node.body:
        _collect_locals(stmt, source, rec, prefix="", annotation_points=annotation_points)
    return rec


def _collect_locals(
    stmt: ast.stmt,
    source: str,
    rec: FunctionRecord,
    prefix: str,
    annotation_points: dict[tuple[int, int], str],
) -> None:
    if isinstance(stmt, ast.AnnAssign) and isinstance(stmt.target, ast.Name):
        ann = _segment(source, stmt.annotation)
        rec.variables[prefix + stmt.target.id] = ann
        annotation_points[(stmt.target.lineno, stmt.target.col_offset)] = ann
        return
    if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
        inner_prefix = prefix + stmt.name + "."
        for arg in _collect_args(stmt):
            if arg.annotation is not None:
                ann = _segment(source, arg.annotation)
                rec.variables[inner_prefix + arg.arg] = ann
                annotation_points[(arg.lineno, arg.col_offset)] = ann
        if stmt.returns is not None:
            rec.variables[prefix + stmt.name] = _segment(source, stmt.returns)
        for inner_stmt in stmt.body:
            _collect_locals(inner_stmt, source, rec, inner_prefix, annotation_points)
        return
    for child in ast.iter_child_nodes(stmt):
        if isinstance(child, ast.stmt):
            _collect_locals(child, source, rec, prefix, annotation_points)


def _param_occurrences(
    node: ast.FunctionDef | ast.AsyncFunctionDef,
    tokens: list[_Tok],
    params: Iterable[str],
) -> dict[str, list[list[str]]]:
    if not node.body:
        return {p: [] for p in params}
    body_start = (node.body[0].lineno, 0)
    body_end = node.end_lineno or node.body[-1].lineno
    body_tokens = [
        t for t in tokens if body_start <= (t.row, t.col) and t.row <= body_end
    ]
    occur: dict[str, list[list[str]]] = {p: [] for p in params}
    half = OCCURRENCE_WINDOW // 2
    for i, tok in enumerate(body_tokens):
        if tok.is_identifier and tok.text in occur:
            lo = max(0, i - half)
            window = [t.text for t in body_tokens[lo : i + half + 1]]
            occur[tok.text].append(window)
    return occur


def extract_module(
    file_path: str,
    source: str,
    author: str = "",
    repository: str = "",
    set_tag: str = "",
) -> ModuleRecord:
    """Parse one source file into a module record.

    Raises :class:`ExtractError` when the file does not parse under the
    supported (Python 3) grammar; callers skip such files and record the
    reason.
    """
    try:
        tree = ast.parse(source)
    except (SyntaxError, ValueError) as exc:
        raise ExtractError(f"syntax error: {exc}") from exc
    tokens = _tokenize_source(source)

    record = ModuleRecord(
        author=author, repository=repository, file_path=file_path, set=set_tag
    )
    annotation_points: dict[tuple[int, int], str] = {}

    for alias in (n for n in ast.walk(tree) if isinstance(n, ast.alias)):
        record.imports.append(alias.asname or alias.name.split(".")[0])
    # dedupe, keep first occurrence order
    record.imports = list(dict.fromkeys(record.imports))

    def handle_function(node, container: list[FunctionRecord]) -> None:
        rec = _function_record(node, source, annotation_points)
        rec.params_occur = _param_occurrences(node, tokens, rec.params)
        if node.returns is not None:
            # tag the defining occurrence of the function name
            for tok in tokens:
                if (
                    tok.is_identifier
                    and tok.text == node.name
                    and (tok.row, tok.col) >= (node.lineno, node.col_offset)
                ):
                    annotation_points.setdefault((tok.row, tok.col), rec.ret_type)
                    break
        container.append(rec)

    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            handle_function(node, record.funcs)
        elif isinstance(node, ast.ClassDef):
            cls = ClassRecord(name=node.name)
            for item in node.body:
                if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)):
                    handle_function(item, cls.funcs)
                elif isinstance(item, ast.AnnAssign) and isinstance(item.target, ast.Name):
                    ann = _segment(source, item.annotation)
                    cls.variables[item.target.id] = ann
                    annotation_points[(item.target.lineno, item.target.col_offset)] = ann
            record.classes.append(cls)
        elif isinstance(node, ast.AnnAssign) and isinstance(node.target, ast.Name):
            ann = _segment(source, node.annotation)
            record.variables[node.target.id] = ann
            annotation_points[(node.target.lineno, node.target.col_offset)] = ann

    record.untyped_seq = [t.text for t in tokens]
    record.typed_seq = [
        annotation_points.get((t.row, t.col), "0") if t.is_identifier else "0"
        for t in tokens
    ]
    return record


def extract_project(
    project_dir: str | Path,
    author: str,
    repository: str,
    set_tag: str = "",
) -> tuple[list[ModuleRecord], list[tuple[str, str]]]:
    """Extract every .py file under a project directory, in path order.

    Returns (records, skipped) where skipped holds (path, reason) pairs for
    files that failed to parse.
    """
    root = Path(project_dir)
    records: list[ModuleRecord] = []
    skipped: list[tuple[str, str]] = []
    for path in sorted(root.rglob("*.py")):
        rel = str(path.relative_to(root))
        try:
            source = path.read_text(encoding="utf-8", errors="replace")
            records.append(extract_module(rel, source, author, repository, set_tag))
        except ExtractError as exc:
            skipped.append((rel, str(exc)))
    return records, skipped


# ---------------------------------------------------------------------------
# dataset IO (line-delimited JSON, one object per module)
# ---------------------------------------------------------------------------

def write_dataset(records: Iterable[ModuleRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: (r.author, r.repository, r.file_path))
    with path.open("w", encoding="utf-8") as fh:
        for rec in ordered:
            fh.write(json.dumps(asdict(rec), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def _func_from_dict(d: dict) -> FunctionRecord:
    return FunctionRecord(
        name=d["name"],
        params=dict(d["params"]),
        ret_exprs=list(d["ret_exprs"]),
        ret_type=d["ret_type"],
        variables=dict(d["variables"]),
        params_occur={k: [list(w) for w in v] for k, v in d["params_occur"].items()},
        docstring=dict(d["docstring"]),
    )


def read_dataset(path: str | Path) -> list[ModuleRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExtractError(f"bad dataset line {line_no}: {exc}") from exc
            try:
                records.append(_record_from_dict(d))
            except (KeyError, TypeError, AttributeError) as exc:
                raise ExtractError(f"bad dataset line {line_no}: {exc!r}") from exc
    return records


def _record_from_dict(d: dict) -> ModuleRecord:
    return ModuleRecord(
        author=d["author"],
        repository=d["repository"],
        file_path=d["file_path"],
        untyped_seq=list(d["untyped_seq"]),
        typed_seq=list(d["typed_seq"]),
        imports=list(d["imports"]),
        variables=dict(d["variables"]),
        classes=[
            ClassRecord(
                name=c["name"],
                variables=dict(c["variables"]),
                funcs=[_func_from_dict(f) for f in c["funcs"]],
            )
            for c in d["classes"]
        ],
        funcs=[_func_from_dict(f) for f in d["funcs"]],
        set=d["set"],
    )
