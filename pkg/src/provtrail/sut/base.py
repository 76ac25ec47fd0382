"""System-under-test contract and deterministic test replay."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable

from provtrail.corpus import Test
from provtrail.errors import ContractViolation, InfeasibleTest, UnknownAction

_STRING_RE = re.compile(r'"[^"]*"')
_NUMBER_RE = re.compile(r"(?<![\w?])\d+(?![\w?])")


@dataclass(frozen=True)
class ExecutionResult:
    executed: tuple[tuple[int, str, bool], ...] = ()
    coverage: frozenset[str] = frozenset()
    failure: tuple[int, str] | None = None

    @property
    def skipped(self) -> list[int]:
        return [i for i, _, s in self.executed if s]

    def branch_count(self) -> int:
        return sum(1 for p in self.coverage if p.startswith("branch:"))

    def statement_count(self) -> int:
        return sum(1 for p in self.coverage if p.startswith("stmt:"))


class Sut:
    """Base class for a finite-vocabulary SUT.

    Subclasses define ``name``, ``variable_families`` (prefixes of numbered
    variables such as ``int``), the action vocabulary, the coverage universe,
    and ``_apply``. Actions are plain strings; the vocabulary is fixed, so
    ``list_actions`` does not depend on state.
    """

    name: str = ""
    variable_families: tuple[str, ...] = ()

    # -- subclass hooks ----------------------------------------------------
    def _vocabulary(self) -> list[str]:
        raise NotImplementedError

    def coverage_points(self) -> list[str]:
        raise NotImplementedError

    def new_state(self, fault_injection: bool = False) -> Any:
        raise NotImplementedError

    def reads(self, action: str) -> list[str]:
        """Variables an action requires to be bound."""
        raise NotImplementedError

    def guard(self, state: Any, action: str) -> bool:
        return True

    def _apply(self, state: Any, action: str, hit: Callable[[str], None]) -> None:
        raise NotImplementedError

    def lowerings(self, action: str) -> list[str]:
        """Same action with a smaller literal, smallest first."""
        return []

    # -- generic machinery -------------------------------------------------
    @cached_property
    def vocabulary(self) -> tuple[str, ...]:
        return tuple(self._vocabulary())

    @cached_property
    def _vocab_set(self) -> frozenset[str]:
        return frozenset(self.vocabulary)

    @cached_property
    def _kinds(self) -> frozenset[str]:
        return frozenset(self._mask(a) for a in self.vocabulary)

    @cached_property
    def _var_re(self) -> re.Pattern:
        fams = "|".join(sorted(self.variable_families, key=len, reverse=True))
        return re.compile(rf"\b({fams})(\d+|\?)(?![\w])")

    def reset(self, fault_injection: bool = False) -> Any:
        return self.new_state(fault_injection)

    def knows(self, action: str) -> bool:
        return action in self._vocab_set

    def list_actions(self, state: Any = None) -> list[str]:
        return list(self.vocabulary)

    def enabled(self, state: Any, action: str) -> bool:
        if action not in self._vocab_set:
            raise UnknownAction(f"{self.name}: unknown action {action!r}")
        bound = state.variables
        return all(v in bound for v in self.reads(action)) and self.guard(state, action)

    def execute(self, state: Any, action: str) -> tuple[frozenset[str], str | None]:
        if not self.enabled(state, action):
            raise ContractViolation(f"{self.name}: {action!r} is not enabled")
        touched: set[str] = set()
        try:
            self._apply(state, action, touched.add)
        except Exception as exc:  # crash semantics: any escape is a failure
            return frozenset(touched), f"{type(exc).__name__}: {exc}"
        return frozenset(touched), None

    def variables_in(self, action: str) -> list[str]:
        return [m.group(0) for m in self._var_re.finditer(action)]

    def _mask(self, action: str) -> str:
        out = _STRING_RE.sub("?", action)
        out = self._var_re.sub(lambda m: m.group(1) + "?", out)
        return _NUMBER_RE.sub("?", out)

    def abstract_action(self, action: str) -> str:
        if action in self._vocab_set:
            return self._mask(action)
        if action in self._kinds:
            return action
        raise UnknownAction(f"{self.name}: cannot abstract {action!r}")

    def kinds(self) -> list[str]:
        return sorted(self._kinds)

    def rename(self, action: str, mapping: dict[str, str]) -> str:
        return self._var_re.sub(lambda m: mapping.get(m.group(0), m.group(0)), action)


_REGISTRY: dict[str, Sut] = {}


def register(sut: Sut) -> Sut:
    _REGISTRY[sut.name] = sut
    return sut


def get_sut(sut: str | Sut) -> Sut:
    if isinstance(sut, Sut):
        return sut
    try:
        return _REGISTRY[sut]
    except KeyError:
        raise UnknownAction(f"unknown SUT {sut!r}") from None


def sut_ids() -> list[str]:
    return sorted(_REGISTRY)


def detect_sut(actions) -> Sut:
    """Pick the registered SUT whose vocabulary contains every action."""
    actions = set(actions)
    for sid in sut_ids():
        sut = _REGISTRY[sid]
        if all(sut.knows(a) for a in actions):
            return sut
    raise UnknownAction("no registered SUT accepts all actions")


def run_test(
    sut: str | Sut,
    t: Test,
    skip_disabled: bool = True,
    fault_injection: bool = False,
) -> ExecutionResult:
    """Replay ``t`` from a fresh state.

    With ``skip_disabled`` the replay is best-effort; otherwise a disabled
    component raises ``InfeasibleTest``. A failure halts the replay.
    """
    s = get_sut(sut)
    state = s.reset(fault_injection)
    executed: list[tuple[int, str, bool]] = []
    coverage: set[str] = set()
    for i, c in enumerate(t.components):
        if not s.enabled(state, c.action):
            if not skip_disabled:
                raise InfeasibleTest(i, c.action)
            executed.append((i, c.action, True))
            continue
        touched, failure = s.execute(state, c.action)
        executed.append((i, c.action, False))
        coverage |= touched
        if failure is not None:
            return ExecutionResult(tuple(executed), frozenset(coverage), (i, failure))
    return ExecutionResult(tuple(executed), frozenset(coverage), None)


@dataclass
class VarState:
    """Common state shape: variable bindings plus per-SUT extras."""

    variables: dict[str, Any] = field(default_factory=dict)
    fault_injection: bool = False
