"""Annotation parsing and label normalization.

Annotation strings are parsed into a small type grammar
(``name`` | ``name[arg, ...]``) and rewritten into a canonical label space:
aliases resolved, heads fully qualified, ``Any``/``None`` labels dropped,
and nesting capped at two levels (deeper arguments become ``Any``).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping

__all__ = [
    "TypeExpr",
    "TypeParseError",
    "LabelSpace",
    "parse_type",
    "normalize",
    "drop_trivial_functions",
    "build_label_space",
    "load_alias_table",
    "load_qualify_table",
    "load_trivial_names",
    "DEPTH_LIMIT",
    "COMMON_THRESHOLD",
]

# Nested level cap: the head counts as level 1, so e.g. List[List[Any]]
# keeps two real constructor levels and caps everything below.
DEPTH_LIMIT = 2

# A label is "common" when it occurs at least this many times in a dataset.
COMMON_THRESHOLD = 100

# typing constructs keep their bare spelling as the canonical form.
TYPING_NAMES = frozenset(
    {
        "Any", "AnyStr", "Callable", "ClassVar", "Coroutine", "Counter",
        "DefaultDict", "Deque", "Dict", "Final", "FrozenSet", "Generator",
        "Hashable", "ItemsView", "Iterable", "Iterator", "KeysView", "List",
        "Literal", "Mapping", "MutableMapping", "MutableSequence",
        "MutableSet", "NamedTuple", "NoReturn", "Optional", "OrderedDict",
        "Sequence", "Set", "Sized", "Text", "Tuple", "Type", "Union",
        "ValuesView", "Awaitable", "AsyncIterator", "AsyncIterable",
        "AsyncGenerator", "ChainMap", "AbstractSet", "ByteString",
        "ContextManager", "Annotated",
    }
)

# Builtin scalar types get the explicit builtins. prefix; container builtins
# (list, dict, ...) are rewritten to typing spellings by the alias table first.
BUILTIN_TYPES = frozenset(
    {
        "int", "float", "complex", "bool", "str", "bytes", "bytearray",
        "memoryview", "object", "range", "slice",
    }
)


class TypeParseError(ValueError):
    """Raised when an annotation string does not parse under the grammar."""


@dataclass(frozen=True)
class TypeExpr:
    """A parsed annotation: a head name and nested arguments."""

    head: str
    args: tuple["TypeExpr", ...] = ()

    def __str__(self) -> str:
        if self.head == "[]" and self.args:
            return "[" + ", ".join(str(a) for a in self.args) + "]"
        if not self.args:
            return self.head
        return self.head + "[" + ", ".join(str(a) for a in self.args) + "]"


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_NAME_START = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_NAME_CHARS = _NAME_START | frozenset("0123456789.")

_LITERAL_ATOMS = {"[]": "[]", "{}": "{}", "()": "()"}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str) -> TypeParseError:
        return TypeParseError(f"{msg} at position {self.pos} in {self.text!r}")

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse_expr(self) -> TypeExpr:
        # top-level | unions collapse into Union[...]
        first = self.parse_atom()
        branches = [first]
        self.skip_ws()
        while self.peek() == "|":
            self.pos += 1
            branches.append(self.parse_atom())
            self.skip_ws()
        if len(branches) == 1:
            return first
        return TypeExpr("Union", tuple(branches))

    def parse_atom(self) -> TypeExpr:
        self.skip_ws()
        ch = self.peek()
        if ch in "\"'":
            return self.parse_quoted(ch)
        if ch == "[":
            return self.parse_list_display()
        if ch == "{":
            return self.parse_empty_pair("{", "}")
        if ch == "(":
            return self.parse_empty_pair("(", ")")
        if self.text.startswith("...", self.pos):
            self.pos += 3
            return TypeExpr("...")
        if ch not in _NAME_START:
            raise self.error("expected a type name")
        return self.parse_named()

    def parse_quoted(self, quote: str) -> TypeExpr:
        # forward references: the quoted content is itself an annotation
        end = self.text.find(quote, self.pos + 1)
        if end < 0:
            raise self.error("unterminated quote")
        inner = self.text[self.pos + 1 : end]
        self.pos = end + 1
        if not inner.strip():
            raise self.error("empty quoted annotation")
        return _Parser(inner).run()

    def parse_empty_pair(self, opener: str, closer: str) -> TypeExpr:
        start = self.pos
        self.pos += 1
        self.skip_ws()
        if self.peek() != closer:
            self.pos = start
            raise self.error(f"expected empty {opener}{closer} literal")
        self.pos += 1
        return TypeExpr(opener + closer)

    def parse_list_display(self) -> TypeExpr:
        # [] is a literal atom; [a, b] parses as a bracket group
        self.pos += 1
        self.skip_ws()
        if self.peek() == "]":
            self.pos += 1
            return TypeExpr("[]")
        args = self.parse_arglist("]")
        return TypeExpr("[]", tuple(args))

    def parse_named(self) -> TypeExpr:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] in _NAME_CHARS:
            self.pos += 1
        head = self.text[start : self.pos]
        if not head or head.startswith(".") or head.endswith(".") or ".." in head:
            raise self.error("malformed type name")
        self.skip_ws()
        if self.peek() != "[":
            return TypeExpr(head)
        self.pos += 1
        self.skip_ws()
        if self.peek() == "]":
            raise self.error("empty argument list")
        args = self.parse_arglist("]")
        return TypeExpr(head, tuple(args))

    def parse_arglist(self, closer: str) -> list[TypeExpr]:
        args = [self.parse_expr()]
        self.skip_ws()
        while self.peek() == ",":
            self.pos += 1
            args.append(self.parse_expr())
            self.skip_ws()
        if self.peek() != closer:
            raise self.error(f"expected {closer!r}")
        self.pos += 1
        return args

    def run(self) -> TypeExpr:
        self.skip_ws()
        expr = self.parse_expr()
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error("trailing characters")
        return expr


def parse_type(annotation: str) -> TypeExpr:
    """Parse an annotation string; raises :class:`TypeParseError` on garbage."""
    if not annotation or not annotation.strip():
        raise TypeParseError("empty annotation")
    return _Parser(annotation).run()


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

def _data_file(name: str) -> dict:
    with resources.files("typelab.data").joinpath(name).open("r", encoding="utf-8") as fh:
        return json.load(fh)


def load_alias_table() -> dict[str, str]:
    """Shipped alias table; editable, extend via config."""
    return dict(_data_file("aliases.json"))


def load_qualify_table() -> dict[str, str]:
    """Shipped static name -> qualified-path table for well-known imports."""
    return dict(_data_file("qualified_names.json"))


def load_trivial_names() -> list[str]:
    """Dunder methods with grammar-forced return types."""
    return list(_data_file("trivial_functions.json"))


def _resolve_alias(head: str, alias_table: Mapping[str, str]) -> str:
    seen = {head}
    while head in alias_table:
        head = alias_table[head]
        if head in seen:
            break
        seen.add(head)
    # typing.X collapses to its bare canonical spelling
    if head.startswith("typing.") and head[len("typing."):] in TYPING_NAMES:
        head = head[len("typing."):]
    return head


def _qualify(
    head: str,
    qualify_table: Mapping[str, str],
    imports: frozenset[str],
    module_name: str | None,
) -> str:
    if head in TYPING_NAMES or head in {"...", "[]", "{}", "()", "None"}:
        return head
    if head in BUILTIN_TYPES:
        return "builtins." + head
    if "." in head:
        first, rest = head.split(".", 1)
        if first in imports and first in qualify_table:
            return qualify_table[first] + "." + rest
        return head
    if head in imports:
        return qualify_table.get(head, head)
    if module_name:
        return f"{module_name}.{head}"
    return head


def _rewrite(
    t: TypeExpr,
    alias_table: Mapping[str, str],
    qualify_table: Mapping[str, str],
    imports: frozenset[str],
    module_name: str | None,
) -> TypeExpr:
    head = _resolve_alias(t.head, alias_table)
    head = _qualify(head, qualify_table, imports, module_name)
    args = tuple(
        _rewrite(a, alias_table, qualify_table, imports, module_name) for a in t.args
    )
    return TypeExpr(head, args)


def _cap_depth(t: TypeExpr, level: int, limit: int) -> TypeExpr:
    # nesting counts type constructors: terminals never add a level, so e.g.
    # Dict[str, List[str]] (constructor depth 2) survives while the third
    # constructor in List[List[Set[int]]] collapses to a terminal Any
    if t.args and level > limit:
        return TypeExpr("Any")
    return TypeExpr(t.head, tuple(_cap_depth(a, level + 1, limit) for a in t.args))


def normalize(
    t: TypeExpr,
    alias_table: Mapping[str, str],
    qualify_table: Mapping[str, str],
    imports: Iterable[str] = (),
    module_name: str | None = None,
    depth_limit: int = DEPTH_LIMIT,
) -> str | None:
    """Rewrite a parsed annotation into its canonical label.

    Applies, in order: alias resolution, head qualification, the
    ``Any``/``None`` drop (returns ``None``), and the nesting cap. ``imports``
    is the module's imported-name list; names neither imported, builtin nor
    typing constructs are qualified with ``module_name``.
    """
    rewritten = _rewrite(t, alias_table, qualify_table, frozenset(imports), module_name)
    if rewritten.head in ("Any", "None"):
        return None
    return str(_cap_depth(rewritten, 1, depth_limit))


def normalize_annotation(
    annotation: str,
    alias_table: Mapping[str, str],
    qualify_table: Mapping[str, str],
    imports: Iterable[str] = (),
    module_name: str | None = None,
) -> str | None:
    """Parse + normalize in one step; raises on parse failure."""
    return normalize(
        parse_type(annotation), alias_table, qualify_table, imports, module_name
    )


# ---------------------------------------------------------------------------
# trivial-function filtering and label space
# ---------------------------------------------------------------------------

def drop_trivial_functions(records, trivial_names: Iterable[str] | None = None):
    """Remove functions with grammar-forced return types from the records.

    Operates on extractor module records; returns new records whose module-
    and class-level function lists exclude the configured trivial names.
    """
    names = set(trivial_names) if trivial_names is not None else set(load_trivial_names())
    out = []
    for record in records:
        funcs = [f for f in record.funcs if f.name not in names]
        classes = [
            c.replace_funcs([f for f in c.funcs if f.name not in names])
            for c in record.classes
        ]
        out.append(record.replace(funcs=funcs, classes=classes))
    return out


@dataclass
class LabelSpace:
    """Occurrence counts of canonical labels, split at the common threshold."""

    counts: dict[str, int]
    threshold: int = COMMON_THRESHOLD
    common: set[str] = field(init=False)
    rare: set[str] = field(init=False)

    def __post_init__(self) -> None:
        self.common = {t for t, c in self.counts.items() if c >= self.threshold}
        self.rare = {t for t, c in self.counts.items() if c < self.threshold}

    @property
    def labels(self) -> set[str]:
        return set(self.counts)


def build_label_space(labels: Iterable[str], threshold: int = COMMON_THRESHOLD) -> LabelSpace:
    """Count canonical labels and partition them into common/rare."""
    return LabelSpace(dict(Counter(labels)), threshold)
