"""Shared fixtures: expensive exact sweeps are computed once per session."""

import pytest

from thinlab.exact import boundary_sweep

P_GRID = [round(0.02 * i, 10) for i in range(1, 50)]


@pytest.fixture(scope="session")
def box_sweeps():
    """Exact box-conditional curves for the three window sizes."""
    return {k: boundary_sweep(k, P_GRID) for k in (3, 4, 5)}


# one visible line per acceptance criterion, even when the test passes
# (stdout of passing tests is otherwise swallowed by capture)
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
