from pathlib import Path

import pytest

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


@pytest.fixture
def programs() -> Path:
    return PROGRAMS


def read_program(name: str) -> str:
    return (PROGRAMS / name).read_text()


ACCEPTANCE: list[tuple[str, bool, str]] = []


def record(criterion: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE.append((criterion, bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'}  {criterion}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
