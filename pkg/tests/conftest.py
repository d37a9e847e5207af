"""Shared fixtures: the acceptance ledger printed at the end of the run."""

import pytest

_LEDGER: list[tuple[str, bool, str]] = []


class AcceptanceLedger:
    def record(self, label: str, ok: bool, detail: str) -> None:
        _LEDGER.append((label, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}")


@pytest.fixture(scope="session")
def ledger():
    return AcceptanceLedger()


def pytest_terminal_summary(terminalreporter):
    if not _LEDGER:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _LEDGER:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}")
