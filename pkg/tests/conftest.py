"""Shared fixtures and the acceptance-report terminal summary."""

import numpy as np
import pytest

# Populated by tests/test_acceptance.py; one line per criterion.
ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def log_grid():
    return np.geomspace(1e-3, 1e2, 200)
