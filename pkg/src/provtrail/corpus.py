"""Test/component data model, the ``.test`` file format, and origin tracing.

A test file holds one component per line::

    avl1.insert(int2)           # STEP 4   ;;; quick0.test:15

The ``# STEP`` comment is optional on input and always written on output.
The annotation after `` ;;; `` is one of

* ``name:pos``               a single origin (``pos`` is a zero-based index)
* ``~name:pos``              a single origin matched by action kind only
* ``{name=deg,name=deg}``    a weighted set of contributing tests
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Union

from provtrail.errors import (
    AmbiguousProvenance,
    CorpusError,
    ParseError,
    ProvenanceLost,
)

SEPARATOR = " ;;; "
TEST_SUFFIX = ".test"

_STEP_RE = re.compile(r"^(?P<action>.*?)\s+# STEP (?P<step>\d+)\s*$")
_NAME_RE = re.compile(r"^[^\s:{}=,~]+$")


def check_action(text: str) -> str:
    """Validate action text; returns it unchanged."""
    if not isinstance(text, str) or not text:
        raise ValueError("action text must be a non-empty string")
    if "\n" in text or "\r" in text:
        raise ValueError(f"action text contains a newline: {text!r}")
    if SEPARATOR in text:
        raise ValueError(f"action text contains the reserved separator: {text!r}")
    if text != text.strip():
        raise ValueError(f"action text has surrounding whitespace: {text!r}")
    return text


def _check_name(name: str) -> str:
    if not _NAME_RE.match(name):
        raise ValueError(f"invalid test name {name!r}")
    return name


@dataclass(frozen=True, order=True)
class Origin:
    test_name: str
    position: int

    def __post_init__(self) -> None:
        _check_name(self.test_name)
        if self.position < 0:
            raise ValueError(f"negative position in origin {self}")

    def __str__(self) -> str:
        return f"{self.test_name}:{self.position}"


@dataclass(frozen=True)
class Single:
    """Exactly one source component.

    ``abstract`` marks pseudo-provenance found by action-kind matching; the
    source component then has the same kind but possibly different text.
    """

    origin: Origin
    abstract: bool = False

    def __str__(self) -> str:
        return ("~" if self.abstract else "") + str(self.origin)


@dataclass(frozen=True)
class Weighted:
    """Several contributing tests with positive degrees, sorted by name."""

    entries: tuple[tuple[str, Fraction], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("weighted annotation needs at least one entry")
        names = [n for n, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate names in weighted annotation: {names}")
        for name, degree in self.entries:
            _check_name(name)
            if degree <= 0:
                raise ValueError(f"non-positive degree for {name}: {degree}")
        normalized = tuple(sorted((n, Fraction(d)) for n, d in self.entries))
        object.__setattr__(self, "entries", normalized)

    @classmethod
    def from_counts(cls, counts: Mapping[str, int | Fraction]) -> Weighted:
        return cls(tuple(counts.items()))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    def __str__(self) -> str:
        body = ",".join(f"{n}={format_degree(d)}" for n, d in self.entries)
        return "{" + body + "}"


Annotation = Union[None, Single, Weighted]


def format_degree(d: Fraction) -> str:
    """Decimal string when the expansion terminates, ``p/q`` otherwise."""
    d = Fraction(d)
    if d.denominator == 1:
        return str(d.numerator)
    den = d.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{d.numerator}/{d.denominator}"
    digits = max(twos, fives)
    scaled = d * 10**digits
    whole, frac = divmod(scaled.numerator, 10**digits)
    return f"{whole}.{str(frac).rjust(digits, '0')}".rstrip("0")


@dataclass(frozen=True)
class Component:
    action: str
    annotation: Annotation = None

    def __post_init__(self) -> None:
        check_action(self.action)

    def with_annotation(self, annotation: Annotation) -> Component:
        return Component(self.action, annotation)


@dataclass(frozen=True)
class Test:
    name: str
    components: tuple[Component, ...] = ()

    # not a pytest class
    __test__ = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> Component:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    @property
    def actions(self) -> list[str]:
        return [c.action for c in self.components]

    def renamed(self, name: str) -> Test:
        return Test(name, self.components)

    @classmethod
    def from_actions(cls, name: str, actions: Iterable[str]) -> Test:
        return cls(name, tuple(Component(a) for a in actions))


def strip_annotations(t: Test) -> Test:
    return Test(t.name, tuple(Component(c.action) for c in t.components))


# --------------------------------------------------------------------------
# parsing / serialization


def _parse_annotation(text: str, name: str | None, lineno: int) -> Annotation:
    text = text.strip()
    try:
        if text.startswith("{"):
            if not text.endswith("}"):
                raise ValueError("unterminated weighted set")
            entries = []
            for item in text[1:-1].split(","):
                n, eq, deg = item.partition("=")
                if not eq:
                    raise ValueError(f"weighted entry without '=': {item!r}")
                entries.append((n.strip(), Fraction(deg.strip())))
            return Weighted(tuple(entries))
        abstract = text.startswith("~")
        if abstract:
            text = text[1:]
        test_name, colon, pos = text.rpartition(":")
        if not colon or not pos.isdigit():
            raise ValueError(f"expected <test>:<position>, got {text!r}")
        return Single(Origin(test_name, int(pos)), abstract=abstract)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"malformed annotation: {exc}", lineno, name) from None


def parse_test(name: str, text: str) -> Test:
    """Parse the textual test format; line numbers in errors are 1-based."""
    components: list[Component] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        head, sep, tail = raw.partition(SEPARATOR)
        annotation = _parse_annotation(tail, name, lineno) if sep else None
        m = _STEP_RE.match(head)
        if m:
            step = int(m.group("step"))
            if step != len(components):
                raise ParseError(
                    f"STEP index {step} does not match component index {len(components)}",
                    lineno,
                    name,
                )
            action = m.group("action").strip()
        else:
            action = head.strip()
        try:
            components.append(Component(action, annotation))
        except ValueError as exc:
            raise ParseError(str(exc), lineno, name) from None
    return Test(name, tuple(components))


def serialize_test(t: Test) -> str:
    lines = []
    for i, c in enumerate(t.components):
        line = f"{c.action.ljust(27)} # STEP {str(i).ljust(3)}"
        if c.annotation is None:
            line = line.rstrip()
        else:
            line += SEPARATOR + str(c.annotation)
        lines.append(line + "\n")
    return "".join(lines)


def read_test(path: Path) -> Test:
    path = Path(path)
    return parse_test(path.name, path.read_text(encoding="utf-8"))


def write_test(path: Path, t: Test) -> None:
    Path(path).write_text(serialize_test(t), encoding="utf-8", newline="\n")


# --------------------------------------------------------------------------
# corpus


@dataclass(frozen=True)
class Corpus:
    tests: Mapping[str, Test]
    seed_names: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "tests", dict(self.tests))
        object.__setattr__(self, "seed_names", frozenset(self.seed_names))

    @classmethod
    def build(cls, seeds: Iterable[Test], generated: Iterable[Test] = ()) -> Corpus:
        tests: dict[str, Test] = {}
        seed_names = set()
        for t in seeds:
            tests[t.name] = t
            seed_names.add(t.name)
        for t in generated:
            if t.name in tests:
                raise CorpusError(f"duplicate test name {t.name}")
            tests[t.name] = t
        return cls(tests, frozenset(seed_names))

    def seeds(self) -> list[Test]:
        return [self.tests[n] for n in sorted(self.seed_names)]

    def generated(self) -> list[Test]:
        return [self.tests[n] for n in sorted(self.tests) if n not in self.seed_names]

    def component(self, origin: Origin) -> Component:
        t = self.tests.get(origin.test_name)
        if t is None or origin.position >= len(t):
            raise CorpusError(f"dangling reference {origin}")
        return t.components[origin.position]

    def with_tests(self, extra: Iterable[Test]) -> Corpus:
        tests = dict(self.tests)
        for t in extra:
            tests[t.name] = t
        return Corpus(tests, self.seed_names)

    def validate(self) -> None:
        """Check that every origin resolves and that references are acyclic."""
        edges: dict[str, set[str]] = {name: set() for name in self.tests}
        for name in sorted(self.tests):
            for i, c in enumerate(self.tests[name].components):
                ann = c.annotation
                if isinstance(ann, Single):
                    try:
                        target = self.component(ann.origin)
                    except CorpusError:
                        raise CorpusError(
                            f"dangling reference {ann.origin} from {name}:{i}"
                        ) from None
                    if not ann.abstract and target.action != c.action:
                        raise CorpusError(
                            f"{name}:{i} annotated with {ann.origin} but actions differ: "
                            f"{c.action!r} vs {target.action!r}"
                        )
                    edges[name].add(ann.origin.test_name)
                elif isinstance(ann, Weighted):
                    for ref in ann.names:
                        if ref not in self.tests:
                            raise CorpusError(
                                f"dangling reference {ref} from {name}:{i}"
                            )
                        edges[name].add(ref)
        cycle = _find_cycle(edges)
        if cycle:
            raise CorpusError("origin cycle: " + " -> ".join(cycle))


def _find_cycle(edges: Mapping[str, set[str]]) -> list[str] | None:
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {n: WHITE for n in edges}
    for root in sorted(edges):
        if colour[root] != WHITE:
            continue
        stack = [(root, iter(sorted(edges[root])))]
        path = [root]
        colour[root] = GREY
        while stack:
            node, children = stack[-1]
            for child in children:
                if colour[child] == GREY:
                    return path[path.index(child):] + [child]
                if colour[child] == WHITE:
                    colour[child] = GREY
                    path.append(child)
                    stack.append((child, iter(sorted(edges[child]))))
                    break
            else:
                colour[node] = BLACK
                stack.pop()
                path.pop()
    return None


def read_dir(directory: Path) -> list[Test]:
    directory = Path(directory)
    if not directory.is_dir():
        raise CorpusError(f"not a directory: {directory}")
    return [read_test(p) for p in sorted(directory.glob(f"*{TEST_SUFFIX}"))]


def load_corpus(seed_dir: Path, generated_dir: Path | None = None) -> Corpus:
    seeds = read_dir(seed_dir)
    if not seeds:
        raise CorpusError(f"no seeds in {seed_dir}")
    generated = read_dir(generated_dir) if generated_dir is not None else []
    corpus = Corpus.build(seeds, generated)
    corpus.validate()
    return corpus


def trace_origin(corpus: Corpus, origin: Origin) -> list[Origin]:
    """Follow ``origin`` through generated tests until a seed is reached."""
    chain = [origin]
    limit = len(corpus.tests) + 1
    while origin.test_name not in corpus.seed_names:
        if len(chain) > limit:
            raise CorpusError(f"origin chain from {chain[0]} does not terminate")
        ann = corpus.component(origin).annotation
        if ann is None:
            raise ProvenanceLost(origin.test_name, origin.position)
        if isinstance(ann, Weighted):
            raise AmbiguousProvenance(origin.test_name, origin.position, ann.names)
        origin = ann.origin
        chain.append(origin)
    return chain


def trace_to_seed(corpus: Corpus, test_name: str, step: int) -> list[Origin]:
    """Chain of origins from ``test_name:step`` back to a seed component.

    Seeds are roots, so tracing a seed component yields ``[]``.
    """
    t = corpus.tests.get(test_name)
    if t is None:
        raise CorpusError(f"unknown test {test_name}")
    if not 0 <= step < len(t):
        raise CorpusError(f"{test_name} has no step {step}")
    if test_name in corpus.seed_names:
        return []
    ann = t.components[step].annotation
    if ann is None:
        raise ProvenanceLost(test_name, step)
    if isinstance(ann, Weighted):
        raise AmbiguousProvenance(test_name, step, ann.names)
    return trace_origin(corpus, ann.origin)
