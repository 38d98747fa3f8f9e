import pytest

from helpers import ACCEPTANCE
from reliefplan import default_instance, default_stochastic_model


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])


@pytest.fixture(scope="session")
def inst():
    return default_instance()


@pytest.fixture(scope="session")
def model():
    return default_stochastic_model()
