"""Shared test fixtures and the acceptance-criteria ledger.

Acceptance tests append one line per criterion; the hook prints the ledger
as its own section after the test summary so the PASS/FAIL verdicts and the
measured values are visible in every run, green or red.
"""
from __future__ import annotations

ACCEPTANCE_LEDGER: list[str] = []


def record_criterion(line: str) -> None:
    ACCEPTANCE_LEDGER.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LEDGER:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LEDGER:
        terminalreporter.write_line(line)
