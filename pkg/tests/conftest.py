"""Shared fixtures: the acceptance-criteria status board."""

from __future__ import annotations

import pytest


def pytest_configure(config):
    config._criterion_lines = []


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for the end-of-run acceptance board.

    Returns the boolean so tests can write `assert criterion(...)`: the line
    is recorded either way, then the assert surfaces the failure to pytest.
    """
    lines = request.config._criterion_lines

    def record(number: int, name: str, passed: bool, detail: str = "") -> bool:
        status = "PASS" if passed else "FAIL"
        suffix = f"  [{detail}]" if detail else ""
        lines.append((number, f"acceptance {number:02d} {name}: {status}{suffix}"))
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
