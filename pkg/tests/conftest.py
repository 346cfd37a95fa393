from __future__ import annotations

from pathlib import Path

import pytest

from tscheck.dsl import load_spec
from tscheck.smt import Solver, find_solver

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "src" / "tscheck" / "corpus"
FIXTURES = Path(__file__).resolve().parent / "fixtures"

requires_solver = pytest.mark.skipif(find_solver() is None, reason="no SMT solver on PATH")


def all_fixture_files() -> list[Path]:
    return sorted(CORPUS.glob("*.tsc")) + sorted(FIXTURES.glob("*.tsc"))


@pytest.fixture(scope="session")
def solver():
    if find_solver() is None:
        pytest.skip("no SMT solver on PATH")
    return Solver(timeout=60)


@pytest.fixture(scope="session")
def examples():
    return load_spec(FIXTURES / "example_views.tsc")


@pytest.fixture(scope="session")
def traffic():
    return load_spec(CORPUS / "traffic_rules.tsc")


@pytest.fixture(scope="session")
def teleport():
    return load_spec(CORPUS / "teleport.tsc")


@pytest.fixture(scope="session")
def follow():
    return load_spec(CORPUS / "follow.tsc")


@pytest.fixture(scope="session")
def oracle_charts():
    return load_spec(FIXTURES / "oracle_charts.tsc")


ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def record():
    """Store the verdict line of one acceptance criterion."""
    def put(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[number] = line
        print(line)
    return put


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
