import pytest

from swkblab.systems import SystemSpec, build_system


@pytest.fixture(scope="session")
def si_h():
    return build_system(SystemSpec("H"))


@pytest.fixture(scope="session")
def ka_h():
    return build_system(SystemSpec("H", "KA", d=1))


@pytest.fixture(scope="session")
def ces_h01():
    return build_system(SystemSpec("H", "CES", b=0.1))


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if not acceptance_log.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(acceptance_log.LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
