"""Synthetic corpus generator properties."""

import ast

import pytest

from typelab import extract as extract_mod
from typelab import normalize as norm_mod
from typelab.evaluation import prior_shift_report
from typelab.fixtures import FixtureSpec, generate_fixture
from typelab.model import samples_from_records
from typelab.normalize import build_label_space


def domain_labels(root, domain_dir):
    records = []
    for proj in sorted(domain_dir.iterdir()):
        author, repo = proj.name.split("__")
        for f in sorted(proj.glob("*.py")):
            records.append(
                extract_mod.extract_module(f.name, f.read_text(), author, repo)
            )
    samples = samples_from_records(
        records, norm_mod.load_alias_table(), norm_mod.load_qualify_table()
    )
    return [s.label for s in samples]


class TestGenerate:
    def test_all_files_parse(self, tmp_path):
        spec = FixtureSpec(projects_per_domain=4, files_per_project=2, functions_per_file=3)
        roots = generate_fixture(spec, 1, tmp_path)
        total = 0
        for root in roots.values():
            for f in root.rglob("*.py"):
                ast.parse(f.read_text())
                total += 1
        assert total == 2 * 4 * 2

    def test_deterministic(self, tmp_path):
        spec = FixtureSpec(projects_per_domain=3, files_per_project=2, functions_per_file=2)
        r1 = generate_fixture(spec, 9, tmp_path / "one")
        r2 = generate_fixture(spec, 9, tmp_path / "two")
        for domain in ("web", "cal"):
            files1 = sorted(p.relative_to(r1[domain]) for p in r1[domain].rglob("*.py"))
            files2 = sorted(p.relative_to(r2[domain]) for p in r2[domain].rglob("*.py"))
            assert files1 == files2
            for rel in files1:
                assert (r1[domain] / rel).read_text() == (r2[domain] / rel).read_text()

    def test_two_seeds_differ(self, tmp_path):
        spec = FixtureSpec(projects_per_domain=3, files_per_project=1, functions_per_file=2)
        r1 = generate_fixture(spec, 1, tmp_path / "one")
        r2 = generate_fixture(spec, 2, tmp_path / "two")
        texts1 = [p.read_text() for p in sorted(r1["web"].rglob("*.py"))]
        texts2 = [p.read_text() for p in sorted(r2["web"].rglob("*.py"))]
        assert texts1 != texts2

    def test_shared_fraction_one_zero_prior_shift(self, tmp_path):
        spec = FixtureSpec(
            projects_per_domain=4,
            files_per_project=2,
            functions_per_file=3,
            shared_type_fraction=1.0,
            rare_tail_size=0,
        )
        roots = generate_fixture(spec, 3, tmp_path)
        web = domain_labels(tmp_path, roots["web"])
        cal = domain_labels(tmp_path, roots["cal"])
        assert prior_shift_report(web, cal).tv_distance == pytest.approx(0.0, abs=1e-12)

    def test_rare_tail_zero_all_common(self, tmp_path):
        spec = FixtureSpec(
            projects_per_domain=8,
            files_per_project=3,
            functions_per_file=8,
            shared_type_fraction=1.0,
            rare_tail_size=0,
        )
        roots = generate_fixture(spec, 4, tmp_path)
        labels = domain_labels(tmp_path, roots["cal"])
        space = build_label_space(labels)
        assert space.rare == set()
        assert space.common

    def test_at_least_two_labels_per_domain(self, tmp_path):
        spec = FixtureSpec(projects_per_domain=3, files_per_project=1, functions_per_file=1)
        roots = generate_fixture(spec, 5, tmp_path)
        for domain in ("web", "cal"):
            labels = domain_labels(tmp_path, roots[domain])
            assert len(set(labels)) >= 2

    def test_degenerate_specs_rejected(self):
        with pytest.raises(ValueError):
            FixtureSpec(projects_per_domain=2)
        with pytest.raises(ValueError):
            FixtureSpec(shared_type_fraction=1.5)
        with pytest.raises(ValueError):
            FixtureSpec(functions_per_file=0)
        with pytest.raises(ValueError):
            FixtureSpec(rare_tail_size=-1)
