import pytest

CRITERIA: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion outcome: ``criterion(number, title, passed, detail)``."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        CRITERIA[number] = (title, bool(passed), detail)
        print(f"C{number:<3d}{'PASS' if passed else 'FAIL'}  {title}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, passed, detail = CRITERIA[number]
        terminalreporter.write_line(f"C{number:<3d}{'PASS' if passed else 'FAIL'}  {title}  {detail}")
