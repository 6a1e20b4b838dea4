import pytest
from hypothesis import settings

# numba compiles lazily on first use, which would trip hypothesis deadlines
settings.register_profile("critiq", deadline=None, max_examples=40)
settings.load_profile("critiq")

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Record (criterion, passed, detail); printed in the terminal summary."""

    def record(name: str, passed: bool, detail: str) -> bool:
        _ACCEPTANCE.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
