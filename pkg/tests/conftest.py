import pytest

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line, print it, and fail the test when it did not pass."""

    def report(number, ok, detail, hard=True):
        status = "PASS" if ok else ("FAIL" if hard else "FLAG")
        line = f"criterion {number:>2}: {status}  {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        if hard:
            assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
