import numpy as np
import pytest

from magtrans.params import resolve_config

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def case1():
    return resolve_config("case1")


@pytest.fixture(scope="session")
def case2():
    return resolve_config("case2")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance():
    """Record and print one PASS/FAIL line per acceptance criterion."""

    def record(number, title, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
