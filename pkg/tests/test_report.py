from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import FS_SEEDS, GOLDEN
from provtrail.corpus import Component, Corpus, Origin, Single, Test, Weighted, load_corpus
from provtrail.engine import GenConfig, campaign
from provtrail.report import (
    ContributionTable,
    contribution_table,
    most_useful_seed,
    rank_kinds,
    rank_seeds,
    render,
)


@pytest.fixture(scope="module")
def fig1_corpus(avl_corpus, fig1):
    return Corpus.build(avl_corpus.seeds(), [fig1])


def test_fig1_counts(fig1_corpus, fig1):
    table = contribution_table([fig1], fig1_corpus, "avl")
    assert table.by_seed == {
        "quick0.test": 2,
        "quick1.test": 2,
        "quick2.test": 1,
        "quick3.test": 5,
        "quick5.test": 3,
    }
    assert table.total_annotated == table.total_components == 13
    assert most_useful_seed(table) == "quick3.test"
    assert sum(table.by_kind.values()) == 13
    assert table.by_kind["int? = ?"] == 5
    assert table.run_length_histogram == {1: 4, 2: 2, 5: 1}


def test_empty_table(avl_corpus):
    table = contribution_table([], avl_corpus, "avl")
    assert table == ContributionTable()
    assert most_useful_seed(table) is None
    assert rank_kinds(table) == []
    assert render(table).startswith("components  0\nannotated   0\n")


def test_weighted_credit_is_degree_normalised(avl_corpus):
    w = Weighted((("quick0.test", Fraction(1)), ("quick3.test", Fraction(3))))
    t = Test("w.test", (Component("int0 = 1", w),))
    table = contribution_table([t], avl_corpus, "avl")
    assert table.by_seed == {"quick0.test": 0.25, "quick3.test": 0.75}
    assert table.run_length_histogram == {1: 1}


def test_rank_ties_break_by_name():
    table = ContributionTable(by_seed={"b": 2, "a": 2, "c": 5}, by_kind={"y": 1, "x": 1})
    assert rank_seeds(table) == [("c", 5), ("a", 2), ("b", 2)]
    assert rank_kinds(table) == [("x", 1), ("y", 1)]


def test_abstract_annotations_can_be_excluded(avl_corpus):
    t = Test(
        "t.test",
        (
            Component("int0 = 1", Single(Origin("quick3.test", 0), abstract=True)),
            Component("avl0 = avl.AVLTree()", Single(Origin("quick3.test", 1))),
        ),
    )
    assert contribution_table([t], avl_corpus, "avl").total_annotated == 2
    table = contribution_table([t], avl_corpus, "avl", include_abstract=False)
    assert table.total_annotated == 1 and table.by_seed == {"quick3.test": 1}


_counts = st.dictionaries(st.text("abcxyz", min_size=1, max_size=4), st.integers(0, 50) | st.floats(0, 50, allow_nan=False).map(lambda x: round(x, 3)))


@given(_counts, _counts, st.dictionaries(st.integers(1, 30), st.integers(1, 9)), st.integers(0, 99), st.integers(0, 99))
def test_json_round_trip(seeds, kinds, hist, annotated, total):
    table = ContributionTable(seeds, kinds, annotated, total, hist)
    assert ContributionTable.from_json(table.to_json()) == table
    assert json.loads(render(table, "json")) == json.loads(table.to_json())


@pytest.fixture(scope="module")
def avl_run(avl_corpus):
    res = campaign(avl_corpus, "avl", GenConfig(budget_tests=300, rng_seed=4))
    return res, Corpus.build(avl_corpus.seeds(), res.tests)


def test_conservation(avl_run):
    res, corpus = avl_run
    for transitive in (False, True):
        table = contribution_table(res.tests, corpus, "avl", resolve_transitive=transitive)
        assert table.total_annotated == table.total_components == sum(len(t) for t in res.tests)
        assert sum(table.by_seed.values()) == table.total_annotated
        assert sum(table.by_kind.values()) == table.total_annotated
        assert sum(k * v for k, v in table.run_length_histogram.items()) == table.total_annotated


def test_transitive_keys_are_seeds(avl_run):
    res, corpus = avl_run
    direct = contribution_table(res.tests, corpus, "avl")
    assert not set(direct.by_seed) <= corpus.seed_names  # learned tests feed later ones
    table = contribution_table(res.tests, corpus, "avl", resolve_transitive=True)
    assert set(table.by_seed) <= corpus.seed_names


def test_fs_kind_ranking_snapshot():
    seeds = load_corpus(FS_SEEDS)
    res = campaign(seeds, "fs", GenConfig(budget_tests=300, rng_seed=7))
    corpus = Corpus.build(seeds.seeds(), res.tests)
    table = contribution_table(res.tests, corpus, "fs", resolve_transitive=True)
    golden = json.loads((GOLDEN / "fs_rank_kinds.json").read_text())
    assert [list(kv) for kv in rank_kinds(table)] == golden


def test_text_render_sections(fig1_corpus, fig1):
    text = render(contribution_table([fig1], fig1_corpus, "avl"))
    lines = text.splitlines()
    assert lines[0] == "components  13"
    rows = [l.split() for l in lines if l.startswith("quick")]
    assert rows == [
        ["quick3.test", "5"], ["quick5.test", "3"], ["quick0.test", "2"],
        ["quick1.test", "2"], ["quick2.test", "1"],
    ]
    assert "run_length  count" in text
    with pytest.raises(ValueError):
        render(ContributionTable(), "xml")
