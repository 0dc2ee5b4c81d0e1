import re

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")

    def keyfn(line):
        m = re.search(r"criterion (\d+)", line)
        return int(m.group(1)) if m else 99

    for line in sorted(ACCEPTANCE_LINES, key=keyfn):
        terminalreporter.write_line(line)
