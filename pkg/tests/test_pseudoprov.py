from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from provtrail.corpus import Component, Corpus, Origin, Single, Test, Weighted, strip_annotations
from provtrail.errors import ProvtrailError
from provtrail.pseudoprov import (
    MatchMode,
    ProvenanceRun,
    SourceIndex,
    compatible_positions,
    greedy_pseudo_provenance,
    oracle_min_segmentation,
    reconstruct,
    runs_of,
)


def _t(name, actions):
    return Test.from_actions(name, actions)


def _scan(corpus, action, names=None):
    names = names or corpus.seed_names
    return {
        Origin(n, j)
        for n in names
        for j, a in enumerate(corpus.tests[n].actions)
        if a == action
    }


def test_compatible_positions_match_exhaustive_scan(avl_corpus):
    for action in ("avl0 = avl.AVLTree()", "int1 = 13", "avl1.insert(int2)"):
        got = compatible_positions(Component(action), avl_corpus)
        assert got == _scan(avl_corpus, action) and got


def test_compatible_positions_edge_cases(avl_corpus):
    assert compatible_positions(Component("avl1.find(int2)"), avl_corpus) == _scan(
        avl_corpus, "avl1.find(int2)"
    )
    assert compatible_positions(Component("int2 = 18"), avl_corpus) == set()
    pre = Component("int1 = 13", Single(Origin("quick1.test", 11)))
    assert compatible_positions(pre, avl_corpus) == {Origin("quick1.test", 11)}
    w = Component("int1 = 13", Weighted.from_counts({"quick1.test": 1}))
    assert compatible_positions(w, avl_corpus) == set()


def test_abstract_mode_matches_by_kind(avl_corpus):
    got = compatible_positions(Component("int2 = 18"), avl_corpus, MatchMode.ABSTRACT, "avl")
    assert got == {
        Origin(n, j)
        for n in avl_corpus.seed_names
        for j, a in enumerate(avl_corpus.tests[n].actions)
        if a.startswith("int") and " = " in a
    }
    with pytest.raises(ValueError):
        SourceIndex(avl_corpus, MatchMode.ABSTRACT)


def test_seed_aligns_with_itself(avl_corpus):
    for seed in avl_corpus.seeds():
        t = Test("copy.test", seed.components)
        out, runs = reconstruct(t, avl_corpus)
        assert oracle_min_segmentation(t, avl_corpus) == 1 or len(t) > 20
        assert len(runs) == 1
        assert runs[0].length == len(seed)


def test_fig1_reconstruction(avl_corpus, fig1):
    stripped = strip_annotations(fig1)
    out, runs = reconstruct(stripped, avl_corpus)
    assert [(r.start, r.end, r.source, r.source_start) for r in runs] == [
        (0, 0, "quick1.test", 11),
        (1, 1, "quick1.test", 14),
        (2, 2, "quick2.test", 4),
        (3, 5, "quick0.test", 14),
        (6, 10, "quick3.test", 1),
        (11, 12, "quick5.test", 10),
    ]
    # the genuine origin of step 3 was quick5; the longest explanation is quick0
    assert fig1[3].annotation.origin == Origin("quick5.test", 3)
    assert out[3].annotation == Single(Origin("quick0.test", 14))
    assert oracle_min_segmentation(stripped, avl_corpus) == 6
    assert runs_of(out) == runs


def test_runs_of_on_fig1(fig1):
    runs = runs_of(fig1)
    assert ProvenanceRun(6, 10, "quick3.test", 1) in runs
    assert max(r.length for r in runs) == 5


def test_unmatched_component_breaks_the_run(avl_corpus):
    t = _t("t.test", ["avl0 = avl.AVLTree()", "int1 = 10", "int2 = 18", "avl0.insert(int0)"])
    out, runs = reconstruct(t, avl_corpus)
    assert out[2].annotation is None
    assert all(not (r.start <= 2 <= r.end) for r in runs)


def test_weighted_component_is_left_alone(avl_corpus):
    w = Weighted.from_counts({"quick3.test": 2})
    t = Test("t.test", (Component("avl0 = avl.AVLTree()"), Component("int1 = 10", w)))
    out, _ = reconstruct(t, avl_corpus)
    assert out[1].annotation == w
    with pytest.raises(ProvtrailError, match="weighted"):
        runs_of(out)


def test_pre_annotated_component_kept_and_joins_its_own_run(avl_corpus):
    t = Test(
        "t.test",
        (
            Component("avl0 = avl.AVLTree()"),
            Component("int1 = 10", Single(Origin("quick3.test", 2))),
            Component("avl0.insert(int0)"),
        ),
    )
    out, runs = reconstruct(t, avl_corpus)
    assert out[1].annotation == Single(Origin("quick3.test", 2))
    assert [r.source for r in runs] == ["quick3.test"]
    assert out[0].annotation.origin == Origin("quick3.test", 1)


# -- greedy against the optimum -----------------------------------------------

TOY = Corpus.build(
    [
        _t("p.test", ["a0", "a1", "a2", "a0"]),
        _t("q.test", ["a1", "a2", "a1"]),
        _t("r.test", ["a2", "a0", "a0", "a1"]),
    ]
)


def _brute_min_runs(t, corpus):
    choices = [sorted(_scan(corpus, a)) or [None] for a in t.actions]
    best = None
    for pick in itertools.product(*choices):
        runs, prev = 0, None
        for o in pick:
            if o is not None and not (
                prev is not None and prev.test_name == o.test_name and prev.position + 1 == o.position
            ):
                runs += 1
            prev = o
        best = runs if best is None else min(best, runs)
    return best


@settings(max_examples=200)
@given(st.lists(st.sampled_from(["a0", "a1", "a2", "a3"]), max_size=7))
def test_dp_oracle_matches_brute_force(actions):
    t = _t("t.test", actions)
    assert oracle_min_segmentation(t, TOY) == _brute_min_runs(t, TOY)


@settings(max_examples=500)
@given(st.lists(st.sampled_from(["a0", "a1", "a2", "a3"]), max_size=12))
def test_greedy_is_valid_maximal_and_never_beats_optimum(actions):
    t = _t("t.test", actions)
    out, runs = reconstruct(t, TOY)
    assert len(runs) >= oracle_min_segmentation(t, TOY)
    for i, c in enumerate(out):
        if c.action == "a3":
            assert c.annotation is None
        else:
            assert TOY.component(c.annotation.origin).action == c.action
    assert runs_of(out) == runs
    for r in runs:
        nxt = r.end + 1
        if nxt < len(t):
            assert Origin(r.source, r.source_start + r.length) not in _scan(TOY, t.actions[nxt])


def test_oracle_length_limit(avl_corpus):
    with pytest.raises(ProvtrailError):
        oracle_min_segmentation(_t("t.test", ["int0 = 1"] * 21), avl_corpus)


def test_greedy_wrapper(avl_corpus, fig1):
    assert greedy_pseudo_provenance(strip_annotations(fig1), avl_corpus) == reconstruct(
        strip_annotations(fig1), avl_corpus
    )[0]


def test_include_generated_sources(avl_corpus):
    gen = _t("g.test", ["int2 = 18", "int1 = 18"])
    c = Corpus.build(avl_corpus.seeds(), [gen])
    t = _t("t.test", ["int2 = 18", "int1 = 18"])
    assert len(reconstruct(t, c)[1]) == 0
    out, runs = reconstruct(t, c, include_generated=True)
    assert runs == [ProvenanceRun(0, 1, "g.test", 0)]


def test_oracle_on_two_fragments(avl_corpus):
    q3 = avl_corpus.tests["quick3.test"].actions
    q1 = avl_corpus.tests["quick1.test"].actions
    t = _t("t.test", q3[1:6] + q1[11:13])
    assert oracle_min_segmentation(t, avl_corpus) == 2
    assert len(reconstruct(t, avl_corpus)[1]) == 2


def test_runs_of_trivial_shapes(fig1):
    assert runs_of(strip_annotations(fig1)) == []
    alt = Test(
        "t.test",
        tuple(
            Component("a", Single(Origin("p.test" if i % 2 else "q.test", i)))
            for i in range(4)
        ),
    )
    assert [r.length for r in runs_of(alt)] == [1, 1, 1, 1]
