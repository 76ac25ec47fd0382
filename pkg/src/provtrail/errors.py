"""Exception hierarchy.

Everything a user can trigger with bad input derives from ``ProvtrailError``;
the CLI maps those to exit code 2.
"""

from __future__ import annotations


class ProvtrailError(Exception):
    """Base class for domain errors."""


class ParseError(ProvtrailError):
    def __init__(self, message: str, line: int | None = None, name: str | None = None):
        self.line = line
        self.name = name
        where = ""
        if name is not None:
            where = name
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class CorpusError(ProvtrailError):
    pass


class ProvenanceLost(ProvtrailError):
    def __init__(self, test_name: str, position: int):
        self.test_name = test_name
        self.position = position
        super().__init__(f"provenance lost at {test_name}:{position}")


class AmbiguousProvenance(ProvtrailError):
    def __init__(self, test_name: str, position: int, contributors: list[str]):
        self.contributors = contributors
        super().__init__(
            f"ambiguous provenance at {test_name}:{position}: "
            + ", ".join(contributors)
        )


class UnknownAction(ProvtrailError):
    pass


class ContractViolation(ProvtrailError):
    """An action was executed while disabled."""


class InfeasibleTest(ProvtrailError):
    def __init__(self, step: int, action: str):
        self.step = step
        self.action = action
        super().__init__(f"infeasible test: step {step} ({action}) is not enabled")


class PredicateError(ProvtrailError):
    pass


class GenerationError(ProvtrailError):
    pass
