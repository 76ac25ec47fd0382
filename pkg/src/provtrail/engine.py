"""Seeded generation loop.

Tests are assembled by replaying short fragments of earlier tests. Each
fragment is drawn uniformly from a pool; its actions are executed in order,
disabled ones are skipped, and each executed action is recorded with the
exact origin it was copied from. A generated test that reaches coverage the
campaign has not seen before is split into fragments and fed back into the
pool.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from provtrail.corpus import (
    Component,
    Corpus,
    Origin,
    Single,
    Test,
    Weighted,
    write_test,
)
from provtrail.errors import GenerationError
from provtrail.rng import SplitMix64
from provtrail.sut import ExecutionResult, Sut, get_sut, run_test

log = logging.getLogger(__name__)

MODES = ("subsequence", "weighted")


@dataclass(frozen=True)
class GenConfig:
    k: int = 3
    max_test_length: int = 50
    budget_tests: int = 100
    rng_seed: int = 0
    mode: str = "subsequence"
    weight_exponent: Fraction = Fraction(2)
    fault_injection: bool = False
    # fragment draws per test; None means 4 * max_test_length
    max_draws: int | None = None

    def __post_init__(self) -> None:
        if self.k < 1 or self.max_test_length < 1:
            raise ValueError("k and max_test_length must be positive")
        if self.k > self.max_test_length:
            raise ValueError("k must not exceed max_test_length")
        if self.budget_tests < 0:
            raise ValueError("budget_tests must be non-negative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.weight_exponent <= 0:
            raise ValueError("weight_exponent must be positive")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must fit in 64 unsigned bits")

    @property
    def draw_limit(self) -> int:
        return self.max_draws if self.max_draws is not None else 4 * self.max_test_length

    def echo(self) -> dict:
        d = asdict(self)
        d["weight_exponent"] = str(self.weight_exponent)
        return d


@dataclass(frozen=True)
class Subsequence:
    source: str
    start: int
    actions: tuple[str, ...]


@dataclass
class SubsequencePool:
    entries: list[Subsequence] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def add_test(self, t: Test, k: int) -> int:
        chunks = split_into_subsequences(t, k)
        self.entries.extend(chunks)
        return len(chunks)

    @classmethod
    def from_tests(cls, tests: Iterable[Test], k: int) -> SubsequencePool:
        pool = cls()
        for t in tests:
            pool.add_test(t, k)
        return pool


@dataclass
class CoverageLedger:
    seen: set[str] = field(default_factory=set)
    per_test: dict[str, frozenset[str]] = field(default_factory=dict)

    def is_novel(self, coverage: Iterable[str]) -> bool:
        return not set(coverage) <= self.seen

    def record(self, name: str, coverage: frozenset[str]) -> None:
        self.per_test[name] = frozenset(coverage)
        self.seen |= coverage


def split_into_subsequences(t: Test, k: int) -> list[Subsequence]:
    if k < 1:
        raise ValueError("k must be at least 1")
    actions = t.actions
    return [
        Subsequence(t.name, start, tuple(actions[start : start + k]))
        for start in range(0, len(actions), k)
    ]


def gen_name(counter: int) -> str:
    return f"gen{counter:06d}.test"


def generate_test(
    pool: SubsequencePool,
    sut: str | Sut,
    cfg: GenConfig,
    rng: SplitMix64,
    name: str = "generated.test",
) -> tuple[Test, ExecutionResult]:
    """Best-effort replay of randomly drawn pool fragments.

    Only executed actions are kept, so strict replay of the returned test
    reproduces the returned result exactly.
    """
    if not pool.entries:
        raise GenerationError("no seeds loaded")
    s = get_sut(sut)
    state = s.reset(cfg.fault_injection)
    components: list[Component] = []
    coverage: set[str] = set()
    failure = None
    for _ in range(cfg.draw_limit):
        entry = pool.entries[rng.below(len(pool.entries))]
        for offset, action in enumerate(entry.actions):
            if len(components) >= cfg.max_test_length:
                break
            if not s.enabled(state, action):
                continue
            touched, msg = s.execute(state, action)
            coverage |= touched
            components.append(
                Component(action, Single(Origin(entry.source, entry.start + offset)))
            )
            if msg is not None:
                failure = (len(components) - 1, msg)
                break
        if failure is not None or len(components) >= cfg.max_test_length:
            break
    executed = tuple((i, c.action, False) for i, c in enumerate(components))
    return Test(name, tuple(components)), ExecutionResult(
        executed, frozenset(coverage), failure
    )


# --------------------------------------------------------------------------
# weighted variant


class ActionCounts:
    """Per-action occurrence statistics over a growing set of tests."""

    def __init__(self, tests: Iterable[Test] = ()):
        self.tests_containing: Counter[str] = Counter()
        self.occurrences: dict[str, dict[str, int]] = {}
        for t in tests:
            self.add(t)

    def add(self, t: Test) -> None:
        for action, n in Counter(t.actions).items():
            self.tests_containing[action] += 1
            self.occurrences.setdefault(action, {})[t.name] = n

    def weight(self, action: str, alpha: Fraction) -> float:
        base = 1 + self.tests_containing[action]
        if Fraction(alpha).denominator == 1:
            return float(base ** int(alpha))
        return float(base) ** float(alpha)

    def annotation(self, action: str):
        occ = self.occurrences.get(action)
        if not occ:
            return None
        return Weighted.from_counts(occ)


def weighted_choice(
    actions: list[str], counts: ActionCounts, alpha: Fraction, rng: SplitMix64
) -> str:
    """Pick one action with probability proportional to ``(1 + count)^alpha``."""
    weights = [counts.weight(a, alpha) for a in actions]
    r = rng.random() * sum(weights)
    acc = 0.0
    for a, w in zip(actions, weights):
        acc += w
        if r < acc:
            return a
    return actions[-1]


def weighted_generate(
    corpus: Corpus | ActionCounts,
    sut: str | Sut,
    cfg: GenConfig,
    rng: SplitMix64,
    name: str = "generated.test",
) -> tuple[Test, ExecutionResult]:
    """Sample every step from all enabled actions, biased toward frequent ones.

    Each emitted component carries a weighted annotation naming every corpus
    test that contains the action, with its occurrence count as degree;
    actions found in no test are emitted unannotated.
    """
    counts = corpus if isinstance(corpus, ActionCounts) else ActionCounts(corpus.tests.values())
    s = get_sut(sut)
    state = s.reset(cfg.fault_injection)
    vocab = s.list_actions(state)
    components: list[Component] = []
    coverage: set[str] = set()
    failure = None
    while len(components) < cfg.max_test_length:
        live = [a for a in vocab if s.enabled(state, a)]
        if not live:
            break
        action = weighted_choice(live, counts, cfg.weight_exponent, rng)
        touched, msg = s.execute(state, action)
        coverage |= touched
        components.append(Component(action, counts.annotation(action)))
        if msg is not None:
            failure = (len(components) - 1, msg)
            break
    executed = tuple((i, c.action, False) for i, c in enumerate(components))
    return Test(name, tuple(components)), ExecutionResult(
        executed, frozenset(coverage), failure
    )


# --------------------------------------------------------------------------
# learning loop


def learn(
    t: Test,
    r: ExecutionResult,
    pool: SubsequencePool,
    ledger: CoverageLedger,
    cfg: GenConfig,
    out_dir: Path | None = None,
) -> bool:
    """Keep ``t`` if it covers a point outside ``ledger.seen``."""
    if not ledger.is_novel(r.coverage):
        return False
    if out_dir is not None:
        write_test(Path(out_dir) / t.name, t)
    pool.add_test(t, cfg.k)
    ledger.record(t.name, r.coverage)
    return True


@dataclass
class CampaignResult:
    tests: list[Test]
    ledger: CoverageLedger
    best: Test | None
    best_result: ExecutionResult | None
    seed_coverage: dict[str, frozenset[str]]
    learned_coverage: dict[str, frozenset[str]]
    generated: int
    pool_size: int

    def manifest(self, sut_id: str, cfg: GenConfig) -> dict:
        best = None
        if self.best is not None:
            best = {
                "name": self.best.name,
                "length": len(self.best),
                "coverage": len(self.best_result.coverage),
                "branches": self.best_result.branch_count(),
                "statements": self.best_result.statement_count(),
            }
        return {
            "sut": sut_id,
            "config": cfg.echo(),
            "seeds": {n: len(c) for n, c in sorted(self.seed_coverage.items())},
            "learned": {n: len(c) for n, c in self.learned_coverage.items()},
            "best": best,
            "generated": self.generated,
            "pool_size": self.pool_size,
            "ledger_size": len(self.ledger.seen),
        }


def campaign(
    seeds: Corpus,
    sut: str | Sut,
    cfg: GenConfig,
    out_dir: Path | None = None,
    extra_manifest: dict | None = None,
) -> CampaignResult:
    """Run ``cfg.budget_tests`` generate/learn iterations starting from ``seeds``.

    With ``out_dir`` every learned test is written as ``genNNNNNN.test``
    (numbered by iteration), the best test as ``best.test``, and a
    ``campaign.json`` manifest alongside.
    """
    seed_tests = seeds.seeds()
    if not seed_tests:
        raise GenerationError("no seeds loaded")
    s = get_sut(sut)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    rng = SplitMix64(cfg.rng_seed)

    ledger = CoverageLedger()
    seed_coverage = {}
    for t in seed_tests:
        r = run_test(s, t, skip_disabled=True, fault_injection=cfg.fault_injection)
        seed_coverage[t.name] = r.coverage
        ledger.record(t.name, r.coverage)

    pool = SubsequencePool.from_tests(seed_tests, cfg.k)
    counts = ActionCounts(seed_tests) if cfg.mode == "weighted" else None

    learned: list[Test] = []
    learned_coverage: dict[str, frozenset[str]] = {}
    best = best_result = None
    for i in range(cfg.budget_tests):
        name = gen_name(i)
        if cfg.mode == "weighted":
            t, r = weighted_generate(counts, s, cfg, rng, name)
        else:
            t, r = generate_test(pool, s, cfg, rng, name)
        if best is None or len(r.coverage) > len(best_result.coverage):
            best, best_result = t, r
        if learn(t, r, pool, ledger, cfg, out_dir):
            learned.append(t)
            learned_coverage[t.name] = r.coverage
            if counts is not None:
                counts.add(t)
            log.info("%s added coverage (ledger now %d)", name, len(ledger.seen))

    result = CampaignResult(
        tests=learned,
        ledger=ledger,
        best=best,
        best_result=best_result,
        seed_coverage=seed_coverage,
        learned_coverage=learned_coverage,
        generated=cfg.budget_tests,
        pool_size=len(pool),
    )
    if out_dir is not None:
        if best is not None:
            write_test(out_dir / "best.test", best)
        manifest = result.manifest(s.name, cfg)
        manifest.update(extra_manifest or {})
        (out_dir / "campaign.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
            newline="\n",
        )
    return result
