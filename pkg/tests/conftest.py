"""Shared pytest plumbing: the acceptance-criteria summary block."""

import contextlib
import time

import pytest

_LINES = []


@pytest.fixture
def criterion():
    """Context manager factory recording one PASS/FAIL line per check.

    The line carries the measured runtime; exceeding the budget fails the
    check even when every assertion inside the block held.
    """

    @contextlib.contextmanager
    def run(name: str, budget_seconds: float):
        started = time.perf_counter()
        try:
            yield
        except BaseException:
            _LINES.append(f"FAIL  {name}")
            raise
        elapsed = time.perf_counter() - started
        if elapsed >= budget_seconds:
            _LINES.append(
                f"FAIL  {name}  (runtime {elapsed:.1f}s over the {budget_seconds:.0f}s budget)"
            )
            raise AssertionError(f"{name}: runtime {elapsed:.1f}s >= {budget_seconds}s")
        _LINES.append(f"PASS  {name}  ({elapsed:.2f}s < {budget_seconds:.0f}s)")

    return run


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _LINES:
        terminalreporter.line(line)
