from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from provtrail.corpus import Corpus, Single, Test, Weighted, read_test
from provtrail.engine import (
    ActionCounts,
    CoverageLedger,
    GenConfig,
    SubsequencePool,
    campaign,
    gen_name,
    generate_test,
    learn,
    split_into_subsequences,
    weighted_choice,
    weighted_generate,
)
from provtrail.errors import GenerationError
from provtrail.rng import SplitMix64
from provtrail.sut import run_test
from toysut import ToySut


def _t(name, actions):
    return Test.from_actions(name, actions)


# -- splitting ----------------------------------------------------------------


def test_split_seven_by_three():
    t = _t("s.test", [f"int0 = {i}" for i in range(7)])
    chunks = split_into_subsequences(t, 3)
    assert [(c.start, len(c.actions)) for c in chunks] == [(0, 3), (3, 3), (6, 1)]
    assert all(c.source == "s.test" for c in chunks)


def test_split_k1_and_thirteen_by_four():
    t = _t("s.test", [f"int0 = {i}" for i in range(13)])
    assert [c.start for c in split_into_subsequences(t, 1)] == list(range(13))
    assert [len(c.actions) for c in split_into_subsequences(t, 4)] == [4, 4, 4, 1]


@given(st.integers(0, 40), st.integers(1, 10))
def test_split_partitions_the_test(n, k):
    t = _t("s.test", [f"int0 = {i % 20}" for i in range(n)])
    chunks = split_into_subsequences(t, k)
    assert [a for c in chunks for a in c.actions] == t.actions
    assert len(chunks) == -(-n // k)


def test_gen_name():
    assert gen_name(0) == "gen000000.test"
    assert gen_name(123456) == "gen123456.test"


@pytest.mark.parametrize(
    "kwargs",
    [dict(k=0), dict(max_test_length=0), dict(k=5, max_test_length=4), dict(budget_tests=-1),
     dict(mode="nope"), dict(weight_exponent=0), dict(rng_seed=-1)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        GenConfig(**kwargs)


# -- generation ---------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(1, 5))
def test_generated_tests_are_provenance_valid_and_replayable(avl_corpus, seed, k):
    pool = SubsequencePool.from_tests(avl_corpus.seeds(), k)
    cfg = GenConfig(k=k, max_test_length=30, rng_seed=seed)
    t, r = generate_test(pool, "avl", cfg, SplitMix64(seed), "g.test")
    assert len(t) <= 30
    for c in t:
        assert isinstance(c.annotation, Single) and not c.annotation.abstract
        assert avl_corpus.component(c.annotation.origin).action == c.action
    strict = run_test("avl", t, skip_disabled=False)
    assert strict == r
    again = generate_test(pool, "avl", cfg, SplitMix64(seed), "g.test")
    assert again == (t, r)


def test_every_action_disabled_gives_empty_test():
    sut = ToySut(2, disabled=frozenset({"a0", "a1"}))
    pool = SubsequencePool.from_tests([_t("s.test", ["a0", "a1"])], 1)
    t, r = generate_test(pool, sut, GenConfig(k=1), SplitMix64(0))
    assert len(t) == 0 and r.coverage == frozenset()


def test_skipped_actions_are_not_recorded():
    sut = ToySut(3, disabled=frozenset({"a1"}))
    pool = SubsequencePool.from_tests([_t("s.test", ["a0", "a1", "a2"])], 3)
    t, _ = generate_test(pool, sut, GenConfig(k=3, max_test_length=4), SplitMix64(5))
    assert t.actions == ["a0", "a2", "a0", "a2"]
    assert [c.annotation.origin.position for c in t] == [0, 2, 0, 2]


def test_empty_pool():
    with pytest.raises(GenerationError, match="no seeds loaded"):
        generate_test(SubsequencePool(), "avl", GenConfig(), SplitMix64(0))


# -- learning -----------------------------------------------------------------


def test_learn_only_on_novel_coverage(tmp_path):
    sut = ToySut(3)
    pool = SubsequencePool.from_tests([_t("s.test", ["a0"])], 2)
    ledger = CoverageLedger()
    ledger.record("s.test", run_test(sut, _t("s.test", ["a0"])).coverage)
    cfg = GenConfig(k=2)

    old = _t("gen000000.test", ["a0", "a0"])
    assert not learn(old, run_test(sut, old), pool, ledger, cfg, tmp_path)
    assert len(pool) == 1 and not (tmp_path / old.name).exists()

    new = _t("gen000001.test", ["a0", "a1", "a0"])
    assert learn(new, run_test(sut, new), pool, ledger, cfg, tmp_path)
    assert len(pool) == 3
    assert ledger.seen == {"branch:a0", "branch:a1"}
    assert read_test(tmp_path / new.name) == new

    # a second novel test is learned on top of the first
    newer = _t("gen000002.test", ["a2"])
    assert learn(newer, run_test(sut, newer), pool, ledger, cfg)
    assert len(ledger.seen) == 3


def test_campaign_budget_zero(avl_corpus, tmp_path):
    res = campaign(avl_corpus, "avl", GenConfig(budget_tests=0), tmp_path)
    assert res.tests == [] and res.best is None and res.generated == 0
    manifest = json.loads((tmp_path / "campaign.json").read_text())
    assert manifest["best"] is None
    assert not (tmp_path / "best.test").exists()


def test_campaign_budget_one(avl_corpus, tmp_path):
    res = campaign(avl_corpus, "avl", GenConfig(budget_tests=1, rng_seed=9), tmp_path)
    assert res.best.name == "gen000000.test"
    assert read_test(tmp_path / "best.test").actions == res.best.actions


def test_campaign_learned_files_and_ledger(avl_corpus, tmp_path):
    cfg = GenConfig(budget_tests=200, rng_seed=3)
    res = campaign(avl_corpus, "avl", cfg, tmp_path)
    assert res.tests, "this configuration is known to learn"
    seed_union = frozenset().union(*res.seed_coverage.values())
    running = set(seed_union)
    for t in res.tests:
        cov = res.learned_coverage[t.name]
        assert not cov <= running
        running |= cov
        assert read_test(tmp_path / t.name) == t
    assert running == res.ledger.seen
    # everything written is valid against the seeds
    Corpus.build(avl_corpus.seeds(), res.tests).validate()
    # identical config gives identical output
    again = campaign(avl_corpus, "avl", cfg)
    assert again.tests == res.tests and again.best == res.best


def test_campaign_ledger_is_monotone_in_budget(avl_corpus):
    sizes = [
        len(campaign(avl_corpus, "avl", GenConfig(budget_tests=b, rng_seed=11)).ledger.seen)
        for b in (0, 20, 60, 150)
    ]
    assert sizes == sorted(sizes)


# -- weighted mode ------------------------------------------------------------


def test_weights_follow_count_plus_one_power():
    counts = ActionCounts([_t("x.test", ["a0", "a0"]), *[_t(f"y{i}.test", ["a0"]) for i in range(4)]])
    assert counts.tests_containing["a0"] == 5
    assert counts.weight("a0", Fraction(2)) == 36
    assert counts.weight("a1", Fraction(2)) == 1
    assert counts.weight("a0", Fraction(1, 2)) == pytest.approx(6 ** 0.5)


def test_unseen_actions_remain_reachable():
    counts = ActionCounts([_t(f"s{i}.test", ["a0"]) for i in range(3)])
    rng = SplitMix64(2)
    picks = {weighted_choice(["a0", "a1"], counts, Fraction(2), rng) for _ in range(500)}
    assert picks == {"a0", "a1"}


def test_weighted_annotations_match_exhaustive_scan():
    seeds = [_t("p.test", ["a0", "a0", "a1"]), _t("q.test", ["a0", "a2"])]
    corpus = Corpus.build(seeds)
    sut = ToySut(4)
    t, _ = weighted_generate(corpus, sut, GenConfig(max_test_length=40), SplitMix64(4))
    assert len(t) == 40
    for c in t:
        scan = {s.name: s.actions.count(c.action) for s in seeds if c.action in s.actions}
        if not scan:
            assert c.annotation is None
        else:
            assert isinstance(c.annotation, Weighted)
            assert dict(c.annotation.entries) == {n: Fraction(v) for n, v in scan.items()}


def test_weighted_campaign_runs(avl_corpus):
    res = campaign(avl_corpus, "avl", GenConfig(budget_tests=20, mode="weighted", rng_seed=1))
    assert res.best is not None
    assert all(isinstance(c.annotation, (Weighted, type(None))) for t in res.tests for c in t)
