from __future__ import annotations

from pathlib import Path

import pytest

from provtrail.corpus import load_corpus, read_test

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
AVL_SEEDS = FIXTURES / "avl-seeds"
FS_SEEDS = FIXTURES / "fs-seeds"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def avl_corpus():
    return load_corpus(AVL_SEEDS)


@pytest.fixture(scope="session")
def fs_corpus():
    return load_corpus(FS_SEEDS)


@pytest.fixture(scope="session")
def fig1():
    return read_test(FIXTURES / "fig1.test")


# one line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, note = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {note}")
