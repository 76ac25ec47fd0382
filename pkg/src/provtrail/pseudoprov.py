"""Pseudo-provenance: explain a test as runs copied out of seed tests.

The greedy pass walks the test once, keeping the set of seed positions that
continue the current run. When no live position continues, the run is
closed, one survivor is chosen (least ``(test, position)``), and the run is
labelled backwards from that survivor. ``oracle_min_segmentation`` computes
the optimal run count by dynamic programming; it exists to check the greedy
pass, not to replace it.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass

from provtrail.corpus import Component, Corpus, Origin, Single, Test, Weighted
from provtrail.errors import ProvtrailError
from provtrail.sut import Sut, get_sut

ORACLE_MAX_LENGTH = 20


class MatchMode(enum.Enum):
    EXACT = "exact"
    ABSTRACT = "abstract"


@dataclass(frozen=True)
class ProvenanceRun:
    start: int
    end: int  # inclusive
    source: str
    source_start: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def origin_at(self, i: int) -> Origin:
        return Origin(self.source, self.source_start + (i - self.start))


class SourceIndex:
    """Lookup from action (or action kind) to positions in the source tests."""

    def __init__(
        self,
        corpus: Corpus,
        mode: MatchMode = MatchMode.EXACT,
        sut: str | Sut | None = None,
        include_generated: bool = False,
    ):
        if mode is MatchMode.ABSTRACT and sut is None:
            raise ValueError("abstract matching needs a SUT")
        self.corpus = corpus
        self.mode = mode
        self.sut = get_sut(sut) if sut is not None else None
        names = sorted(corpus.tests) if include_generated else sorted(corpus.seed_names)
        self.sources = frozenset(names)
        self._index: dict[str, list[Origin]] = defaultdict(list)
        for name in names:
            for pos, c in enumerate(corpus.tests[name].components):
                self._index[self.key(c.action)].append(Origin(name, pos))

    def key(self, action: str) -> str:
        if self.mode is MatchMode.ABSTRACT:
            return self.sut.abstract_action(action)
        return action

    def matches(self, action: str) -> frozenset[Origin]:
        return frozenset(self._index.get(self.key(action), ()))

    def compatible(self, c: Component) -> frozenset[Origin]:
        if isinstance(c.annotation, Single):
            return frozenset([c.annotation.origin])
        if isinstance(c.annotation, Weighted):
            # weighted provenance is left alone and breaks runs
            return frozenset()
        return self.matches(c.action)


def compatible_positions(
    c: Component,
    seeds: Corpus,
    mode: MatchMode = MatchMode.EXACT,
    sut: str | Sut | None = None,
    include_generated: bool = False,
) -> frozenset[Origin]:
    return SourceIndex(seeds, mode, sut, include_generated).compatible(c)


def reconstruct(
    t: Test,
    seeds: Corpus,
    mode: MatchMode = MatchMode.EXACT,
    sut: str | Sut | None = None,
    include_generated: bool = False,
    index: SourceIndex | None = None,
) -> tuple[Test, list[ProvenanceRun]]:
    """Greedy pseudo-provenance; returns the annotated test and its runs."""
    idx = index or SourceIndex(seeds, mode, sut, include_generated)
    comps = list(t.components)
    runs: list[ProvenanceRun] = []
    live: frozenset[Origin] = frozenset()
    run_start = 0
    run_compat: frozenset[Origin] = frozenset()

    def close(end: int) -> None:
        chosen = min(live)
        back = end - run_start
        # every survivor must trace back to a start compatible at run_start,
        # i.e. all survivors describe runs of the same length
        for o in live:
            if o.position < back or Origin(o.test_name, o.position - back) not in run_compat:
                raise AssertionError(f"survivor {o} does not span run {run_start}..{end}")
        run = ProvenanceRun(run_start, end, chosen.test_name, chosen.position - back)
        for i in range(end, run_start - 1, -1):
            if comps[i].annotation is None:
                comps[i] = comps[i].with_annotation(
                    Single(run.origin_at(i), abstract=mode is MatchMode.ABSTRACT)
                )
        runs.append(run)

    for i, c in enumerate(t.components):
        compat = idx.compatible(c)
        extended = frozenset(
            o
            for o in compat
            if o.position > 0 and Origin(o.test_name, o.position - 1) in live
        )
        if extended:
            live = extended
            continue
        if live:
            close(i - 1)
        live = run_compat = compat
        run_start = i
    if live:
        close(len(comps) - 1)
    return Test(t.name, tuple(comps)), runs


def greedy_pseudo_provenance(
    t: Test,
    seeds: Corpus,
    mode: MatchMode = MatchMode.EXACT,
    sut: str | Sut | None = None,
    include_generated: bool = False,
) -> Test:
    return reconstruct(t, seeds, mode, sut, include_generated)[0]


def runs_of(t: Test) -> list[ProvenanceRun]:
    """Maximal stretches of single annotations that step through one source."""
    runs: list[ProvenanceRun] = []
    cur: ProvenanceRun | None = None
    for i, c in enumerate(t.components):
        ann = c.annotation
        if isinstance(ann, Weighted):
            raise ProvtrailError("runs undefined for weighted provenance")
        if ann is None:
            if cur:
                runs.append(cur)
            cur = None
            continue
        o = ann.origin
        if (
            cur is not None
            and cur.end == i - 1
            and cur.source == o.test_name
            and cur.source_start + cur.length == o.position
        ):
            cur = ProvenanceRun(cur.start, i, cur.source, cur.source_start)
            continue
        if cur:
            runs.append(cur)
        cur = ProvenanceRun(i, i, o.test_name, o.position)
    if cur:
        runs.append(cur)
    return runs


def oracle_min_segmentation(
    t: Test,
    seeds: Corpus,
    mode: MatchMode = MatchMode.EXACT,
    sut: str | Sut | None = None,
    include_generated: bool = False,
) -> int:
    """Fewest runs that label every matchable component (DP over origins)."""
    if len(t) > ORACLE_MAX_LENGTH:
        raise ProvtrailError(
            f"oracle limited to tests of length <= {ORACLE_MAX_LENGTH}, got {len(t)}"
        )
    s = get_sut(sut) if mode is MatchMode.ABSTRACT else None
    names = sorted(seeds.tests) if include_generated else sorted(seeds.seed_names)

    def same(a: str, b: str) -> bool:
        return a == b if s is None else s.abstract_action(a) == s.abstract_action(b)

    prev: dict[Origin, int] = {}
    best_prev = 0
    for c in t.components:
        if isinstance(c.annotation, Single):
            compat = [c.annotation.origin]
        elif isinstance(c.annotation, Weighted):
            compat = []
        else:
            compat = [
                Origin(n, j)
                for n in names
                for j, other in enumerate(seeds.tests[n].components)
                if same(c.action, other.action)
            ]
        if not compat:
            prev = {}
            continue
        cur = {}
        for o in compat:
            cont = prev.get(Origin(o.test_name, o.position - 1)) if o.position > 0 else None
            fresh = best_prev + 1
            cur[o] = fresh if cont is None else min(cont, fresh)
        prev = cur
        best_prev = min(cur.values())
    return best_prev
