"""Project splitting and module extraction."""

import pytest

from typelab.extract import (
    ExtractError,
    extract_module,
    read_dataset,
    split_projects,
    write_dataset,
)


class TestSplit:
    def test_ten_projects_sizes(self):
        assignment = split_projects([f"p{i}" for i in range(10)], seed=1)
        sizes = {s: 0 for s in ("train", "valid", "test")}
        for s in assignment.assignment.values():
            sizes[s] += 1
        assert sizes == {"train": 7, "valid": 1, "test": 2}

    def test_deterministic(self):
        projects = [f"p{i}" for i in range(17)]
        assert split_projects(projects, 9).assignment == split_projects(projects, 9).assignment

    def test_every_project_exactly_once(self):
        projects = [f"p{i}" for i in range(23)]
        assignment = split_projects(projects, 4).assignment
        assert sorted(assignment) == sorted(projects)

    def test_ratios_within_one_project(self):
        for n in (3, 5, 9, 12, 31, 100):
            projects = [f"p{i}" for i in range(n)]
            assignment = split_projects(projects, 0)
            sizes = {"train": 0, "valid": 0, "test": 0}
            for s in assignment.assignment.values():
                sizes[s] += 1
            for share, name in zip((0.7, 0.1, 0.2), ("train", "valid", "test")):
                assert abs(sizes[name] - n * share) <= 1.0, (n, sizes)

    def test_too_few_projects(self):
        with pytest.raises(ValueError):
            split_projects(["a", "b"], 0)


LISTING_STYLE = '''import sqlite3

class Executor:
    def __init__(self,
        all_tables: Dict[str, List[str]] = None,
        tables_with_strings: Dict[str, List[str]] = None,
        database_directory: str = None):

        self.all_tables = all_tables
        self.tables_with_strings = tables_with_strings
        if database_directory:
            self.database_directory = database_directory
            self.connection = sqlite3.connect(database_directory)
'''


class TestExtract:
    def test_single_function(self):
        rec = extract_module("m.py", "def f(x: int) -> str:\n    return str(x)\n")
        assert rec.funcs[0].params == {"x": "int"}
        assert rec.funcs[0].ret_type == "str"

    def test_empty_file(self):
        rec = extract_module("m.py", "")
        assert rec.untyped_seq == []
        assert rec.funcs == [] and rec.classes == []

    def test_constructor_three_annotated_params_no_docstring(self):
        rec = extract_module("m.py", LISTING_STYLE)
        ctor = rec.classes[0].funcs[0]
        assert ctor.name == "__init__"
        annotated = {k: v for k, v in ctor.params.items() if v}
        assert annotated == {
            "all_tables": "Dict[str, List[str]]",
            "tables_with_strings": "Dict[str, List[str]]",
            "database_directory": "str",
        }
        assert ctor.docstring == {"func": None, "ret": None, "long_descr": None}

    def test_syntax_error_raises(self):
        with pytest.raises(ExtractError):
            extract_module("m.py", "def broken(:\n")

    def test_python2_print_rejected(self):
        with pytest.raises(ExtractError):
            extract_module("m.py", "print 'hello'\n")

    def test_extraction_pure(self):
        src = "def f(a: int, b: str) -> bool:\n    c: bool = a\n    return c\n"
        assert extract_module("m.py", src) == extract_module("m.py", src)

    def test_literals_normalized(self):
        rec = extract_module("m.py", "x = 42\ny = 'text'\n")
        assert "[number]" in rec.untyped_seq
        assert "[string]" in rec.untyped_seq
        assert "42" not in rec.untyped_seq

    def test_typed_seq_alignment(self):
        src = "def f(count: int, name: str) -> bool:\n    return count\n"
        rec = extract_module("m.py", src)
        assert len(rec.typed_seq) == len(rec.untyped_seq)
        tagged = {
            rec.untyped_seq[i]: rec.typed_seq[i]
            for i in range(len(rec.typed_seq))
            if rec.typed_seq[i] != "0"
        }
        assert tagged == {"count": "int", "name": "str", "f": "bool"}

    def test_every_annotation_in_exactly_one_field(self):
        src = """from typing import List
limit: int = 3

class Box:
    label: str = ""
    def get(self, idx: int) -> bool:
        flag: bool = idx
        def deep(q: List[int]) -> float:
            return q
        return flag
"""
        rec = extract_module("m.py", src)
        found = []
        found.extend(rec.variables.items())
        for cls in rec.classes:
            found.extend(cls.variables.items())
        for _, func in rec.all_funcs():
            found.extend((k, v) for k, v in func.params.items() if v)
            if func.ret_type:
                found.append((func.name, func.ret_type))
            found.extend(func.variables.items())
        annotations = sorted(v for _, v in found)
        assert annotations == sorted(
            ["int", "str", "int", "bool", "bool", "List[int]", "float"]
        )
        # each annotation token appears exactly once across fields
        assert len(found) == len(set(found))

    def test_params_occur_subset_of_params(self):
        src = "def f(alpha: int, beta: str) -> int:\n    return alpha + len(beta)\n"
        rec = extract_module("m.py", src)
        func = rec.funcs[0]
        assert set(func.params_occur) <= set(func.params)
        assert func.params_occur["alpha"], "usage windows recorded"

    def test_docstring_parts(self):
        src = '''def f(x: int) -> str:
    """Turn a number into text.

    Longer description here.

    :return: the formatted text
    """
    return str(x)
'''
        rec = extract_module("m.py", src)
        doc = rec.funcs[0].docstring
        assert doc["func"] == "Turn a number into text."
        assert doc["ret"] == "the formatted text"
        assert "Longer description" in doc["long_descr"]


class TestDatasetIO:
    def test_roundtrip(self, tmp_path):
        src = "def f(x: int) -> str:\n    y: bool = x\n    return y\n"
        records = [
            extract_module("a.py", src, "auth", "repo", "train"),
            extract_module("b.py", "", "auth", "repo", "train"),
        ]
        path = tmp_path / "data.jsonl"
        write_dataset(records, path)
        assert read_dataset(path) == sorted(records, key=lambda r: r.file_path)

    def test_bad_line_reports_position(self, tmp_path):
        path = tmp_path / "data.jsonl"
        path.write_text('{"ok": 1}\nnot json\n')
        with pytest.raises(ExtractError, match="line 1|line 2"):
            read_dataset(path)
