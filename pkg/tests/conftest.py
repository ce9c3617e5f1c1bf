import numpy as np
import pytest
from hypothesis import settings

from acceptance_log import RESULTS
from expweibull.datasets import load_ballbearings, load_carbon_fibre

settings.register_profile("repo", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def ballbearings():
    return load_ballbearings()


@pytest.fixture(scope="session")
def carbon():
    return load_carbon_fibre()


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
