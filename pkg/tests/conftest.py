import pytest

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def _report(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
