from contextlib import contextmanager

import pytest

ACCEPTANCE_RESULTS: list[tuple[int, str, bool]] = []


@pytest.fixture
def criterion():
    """Record a pass/fail line for one acceptance criterion; the lines
    are printed in the terminal summary."""

    @contextmanager
    def _criterion(num: int, description: str):
        try:
            yield
        except BaseException:
            ACCEPTANCE_RESULTS.append((num, description, False))
            raise
        ACCEPTANCE_RESULTS.append((num, description, True))

    return _criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, description, ok in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{num:02d}] {status}  {description}")
