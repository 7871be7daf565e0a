import pytest

from ladder_inversion import rb_default

ACCEPTANCE_LINES = []


@pytest.fixture
def rb():
    return rb_default()


@pytest.fixture
def rb_ideal():
    return rb_default().without_decay()


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
