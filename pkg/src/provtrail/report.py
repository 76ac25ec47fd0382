"""Collective provenance tables: which seeds, and which kinds of action,
generated tests are built from."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from provtrail.corpus import Corpus, Origin, Single, Test, Weighted, trace_origin
from provtrail.errors import CorpusError
from provtrail.sut import Sut, get_sut

Number = int | float


@dataclass
class ContributionTable:
    by_seed: dict[str, Number] = field(default_factory=dict)
    by_kind: dict[str, Number] = field(default_factory=dict)
    total_annotated: int = 0
    total_components: int = 0
    run_length_histogram: dict[int, int] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "by_seed": self.by_seed,
                "by_kind": self.by_kind,
                "total_annotated": self.total_annotated,
                "total_components": self.total_components,
                "run_length_histogram": {
                    str(k): v for k, v in sorted(self.run_length_histogram.items())
                },
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> ContributionTable:
        d = json.loads(text)
        return cls(
            by_seed=dict(d["by_seed"]),
            by_kind=dict(d["by_kind"]),
            total_annotated=d["total_annotated"],
            total_components=d["total_components"],
            run_length_histogram={int(k): v for k, v in d["run_length_histogram"].items()},
        )


def _plain(x: Fraction) -> Number:
    return x.numerator if x.denominator == 1 else float(x)


def _run_lengths(t: Test, include_abstract: bool) -> list[int]:
    """Lengths of consecutive same-source runs; weighted components count as 1."""
    lengths: list[int] = []
    prev: Origin | None = None
    for c in t.components:
        ann = c.annotation
        if isinstance(ann, Single) and (include_abstract or not ann.abstract):
            o = ann.origin
            if prev is not None and prev.test_name == o.test_name and prev.position + 1 == o.position:
                lengths[-1] += 1
            else:
                lengths.append(1)
            prev = o
            continue
        prev = None
        if isinstance(ann, Weighted):
            lengths.append(1)
    return lengths


def contribution_table(
    tests: Iterable[Test],
    corpus: Corpus,
    sut: str | Sut,
    resolve_transitive: bool = False,
    include_abstract: bool = True,
) -> ContributionTable:
    """Tabulate how many generated components came from each source test.

    With ``resolve_transitive`` origins inside generated tests are followed
    back to seeds first. A weighted component spreads one unit of credit
    over its contributors in proportion to their degrees. Abstract (kind
    matched) annotations are skipped unless ``include_abstract``.
    """
    s = get_sut(sut)
    by_seed: Counter = Counter()
    by_kind: Counter = Counter()
    hist: Counter = Counter()
    annotated = total = 0
    for t in tests:
        total += len(t)
        for c in t.components:
            ann = c.annotation
            if isinstance(ann, Single):
                if ann.abstract and not include_abstract:
                    continue
                origin = ann.origin
                if resolve_transitive:
                    origin = trace_origin(corpus, origin)[-1]
                source = corpus.component(origin)
                by_seed[origin.test_name] += Fraction(1)
                by_kind[s.abstract_action(source.action)] += Fraction(1)
                annotated += 1
            elif isinstance(ann, Weighted):
                mass = sum(d for _, d in ann.entries)
                for name, degree in ann.entries:
                    if name not in corpus.tests:
                        raise CorpusError(f"dangling reference {name}")
                    by_seed[name] += degree / mass
                by_kind[s.abstract_action(c.action)] += Fraction(1)
                annotated += 1
        hist.update(_run_lengths(t, include_abstract))
    return ContributionTable(
        by_seed={k: _plain(v) for k, v in sorted(by_seed.items())},
        by_kind={k: _plain(v) for k, v in sorted(by_kind.items())},
        total_annotated=annotated,
        total_components=total,
        run_length_histogram=dict(sorted(hist.items())),
    )


def _ranked(d: dict[str, Number]) -> list[tuple[str, Number]]:
    return sorted(d.items(), key=lambda kv: (-kv[1], kv[0]))


def rank_kinds(table: ContributionTable) -> list[tuple[str, Number]]:
    return _ranked(table.by_kind)


def rank_seeds(table: ContributionTable) -> list[tuple[str, Number]]:
    return _ranked(table.by_seed)


def most_useful_seed(table: ContributionTable) -> str | None:
    ranked = rank_seeds(table)
    return ranked[0][0] if ranked else None


def _fmt(x: Number) -> str:
    return str(x) if isinstance(x, int) else f"{x:.4f}"


def _section(title: str, rows: list[tuple[str, str]]) -> list[str]:
    width = max([len(title)] + [len(k) for k, _ in rows])
    vwidth = max([5] + [len(v) for _, v in rows])
    out = [f"{title.ljust(width)}  {'count'.rjust(vwidth)}"]
    out += [f"{k.ljust(width)}  {v.rjust(vwidth)}" for k, v in rows]
    return out


def render(table: ContributionTable, fmt: str = "text") -> str:
    if fmt == "json":
        return table.to_json() + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [
        f"components  {table.total_components}",
        f"annotated   {table.total_annotated}",
        "",
    ]
    lines += _section("seed", [(k, _fmt(v)) for k, v in rank_seeds(table)])
    lines.append("")
    lines += _section("kind", [(k, _fmt(v)) for k, v in rank_kinds(table)])
    lines.append("")
    lines += _section(
        "run_length",
        [(str(k), str(v)) for k, v in sorted(table.run_length_histogram.items())],
    )
    return "\n".join(lines) + "\n"
