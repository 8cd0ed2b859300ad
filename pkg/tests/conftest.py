import pytest

ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record one summary line for the terminal report."""
    def add(name: str, ok: bool, detail: str) -> None:
        ACCEPTANCE.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
