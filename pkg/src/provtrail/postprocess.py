"""Reduction and normalization of generated tests.

Reduction (ddmin) only deletes components, so the survivors keep their
annotations. Normalization rewrites components in place; a rewritten
component no longer corresponds to anything in a seed, so its annotation
is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from provtrail.corpus import Component, Test
from provtrail.errors import InfeasibleTest, PredicateError
from provtrail.sut import Sut, get_sut, run_test


@dataclass(frozen=True)
class PreservesFailure:
    fault_injection: bool = True

    def holds(self, t: Test, sut: str | Sut) -> bool:
        r = _strict(t, sut, self.fault_injection)
        return r is not None and r.failure is not None


@dataclass(frozen=True)
class PreservesCoverage:
    target: frozenset[str]
    fault_injection: bool = False

    def holds(self, t: Test, sut: str | Sut) -> bool:
        r = _strict(t, sut, self.fault_injection)
        return r is not None and self.target <= r.coverage


@dataclass(frozen=True)
class PreservesCoverageCount:
    min: int
    fault_injection: bool = False

    def holds(self, t: Test, sut: str | Sut) -> bool:
        r = _strict(t, sut, self.fault_injection)
        return r is not None and len(r.coverage) >= self.min


Predicate = PreservesFailure | PreservesCoverage | PreservesCoverageCount


def _strict(t: Test, sut, fault_injection: bool):
    try:
        return run_test(sut, t, skip_disabled=False, fault_injection=fault_injection)
    except InfeasibleTest:
        return None


def _require(p: Predicate, t: Test, sut) -> None:
    if not p.holds(t, sut):
        raise PredicateError("predicate does not hold on original")


# --------------------------------------------------------------------------
# ddmin


def ddmin(items: Sequence, test: Callable[[list], bool]) -> list:
    """Complement-first ddmin; ``test`` must hold on ``items``.

    Returns a 1-minimal sublist (order preserved). Earlier chunks are tried
    before later ones.
    """
    items = list(items)
    if test([]):
        return []
    n = 2
    while len(items) >= 2:
        size, extra = divmod(len(items), n)
        chunks, start = [], 0
        for i in range(n):
            end = start + size + (1 if i < extra else 0)
            chunks.append((start, end))
            start = end
        for lo, hi in chunks:
            complement = items[:lo] + items[hi:]
            if test(complement):
                items = complement
                n = max(n - 1, 2)
                break
        else:
            for lo, hi in chunks:
                subset = items[lo:hi]
                if len(subset) < len(items) and test(subset):
                    items = subset
                    n = 2
                    break
            else:
                if n >= len(items):
                    break
                n = min(2 * n, len(items))
    return items


def ddmin_reduce(t: Test, p: Predicate, sut: str | Sut) -> Test:
    _require(p, t, sut)
    cache: dict[tuple[int, ...], bool] = {}

    def check(idx: list[int]) -> bool:
        key = tuple(idx)
        if key not in cache:
            cache[key] = p.holds(Test(t.name, tuple(t.components[i] for i in idx)), sut)
        return cache[key]

    keep = ddmin(range(len(t)), check)
    return Test(t.name, tuple(t.components[i] for i in keep))


# --------------------------------------------------------------------------
# normalization


def canonical_renaming(t: Test, sut: str | Sut) -> dict[str, str]:
    """Per family, number variables 0, 1, ... in order of first use."""
    s = get_sut(sut)
    mapping: dict[str, str] = {}
    next_index: dict[str, int] = {}
    for c in t.components:
        for var in s.variables_in(c.action):
            if var in mapping:
                continue
            fam = var.rstrip("0123456789")
            mapping[var] = f"{fam}{next_index.get(fam, 0)}"
            next_index[fam] = next_index.get(fam, 0) + 1
    return mapping


def _rewrite(t: Test, actions: list[str]) -> Test:
    comps = []
    for c, a in zip(t.components, actions):
        comps.append(c if a == c.action else Component(a))
    return Test(t.name, tuple(comps))


def rewrite_measure(t: Test, sut: str | Sut) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Order that every accepted rewrite strictly decreases.

    First the sequence of variable indices in occurrence order, then the
    sequence of numeric literals; both compared lexicographically.
    """
    s = get_sut(sut)
    var_idx: list[int] = []
    consts: list[int] = []
    for c in t.components:
        vars_ = s.variables_in(c.action)
        var_idx += [int(v.lstrip("abcdefghijklmnopqrstuvwxyz")) for v in vars_]
        rest = s.rename(c.action, {v: "" for v in vars_})
        consts += [int(x) for x in _digits(rest)]
    return tuple(var_idx), tuple(consts)


def _digits(text: str) -> list[str]:
    out, cur = [], ""
    for ch in text:
        if ch.isdigit():
            cur += ch
        elif cur:
            out.append(cur)
            cur = ""
    if cur:
        out.append(cur)
    return out


def rewrite_bound(t: Test, sut: str | Sut) -> int:
    """Upper bound on accepted rewrites: one renaming plus total literal mass."""
    return 1 + sum(rewrite_measure(t, sut)[1])


def normalize_steps(t: Test, p: Predicate, sut: str | Sut) -> Iterator[Test]:
    """Yield the test after each accepted rewrite, ending at a fixpoint."""
    s = get_sut(sut)
    _require(p, t, sut)
    current = t
    while True:
        changed = False
        mapping = canonical_renaming(current, s)
        renamed = [s.rename(c.action, mapping) for c in current.components]
        if renamed != current.actions:
            candidate = _rewrite(current, renamed)
            if p.holds(candidate, s):
                current = candidate
                changed = True
                yield current
        for i, c in enumerate(current.components):
            for lower in s.lowerings(c.action):
                actions = current.actions
                actions[i] = lower
                candidate = _rewrite(current, actions)
                if p.holds(candidate, s):
                    current = candidate
                    changed = True
                    yield current
                    break
        if not changed:
            return


def normalize(t: Test, p: Predicate, sut: str | Sut) -> Test:
    result = t
    for result in normalize_steps(t, p, sut):
        pass
    return result
