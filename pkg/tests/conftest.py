import pytest

CRITERION_LINES = []


@pytest.fixture
def report():
    def emit(result):
        lines = [result.line()]
        for e in result.extra:
            lines.append("       + %s: %s %s" % (e.label, "ok" if e.passed else "FAILED", e.detail))
        for line in lines:
            print(line)
        CRITERION_LINES.extend(lines)
    return emit


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
