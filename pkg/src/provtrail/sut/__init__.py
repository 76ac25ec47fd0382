"""Bundled systems under test; importing this package registers them."""

from provtrail.sut.base import (
    ExecutionResult,
    Sut,
    detect_sut,
    get_sut,
    register,
    run_test,
    sut_ids,
)
from provtrail.sut import avl, fs  # noqa: F401  (registration)

__all__ = [
    "ExecutionResult",
    "Sut",
    "detect_sut",
    "get_sut",
    "register",
    "run_test",
    "sut_ids",
]
