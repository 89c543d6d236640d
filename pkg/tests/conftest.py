import sys
from pathlib import Path

import pytest

from ssiv.library import MODELS, list_scenarios

TESTS = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS))

EXAMPLE1 = sorted((MODELS / "example1").glob("*.sz"))
EXAMPLE2 = sorted((MODELS / "example2").glob("*.sz"))


@pytest.fixture(scope="session")
def scenarios():
    return {s.id: s for s in list_scenarios()}


@pytest.fixture
def example1_files():
    return list(EXAMPLE1)


@pytest.fixture
def example2_files():
    return list(EXAMPLE2)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
