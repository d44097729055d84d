import numpy as np
import pytest

from rwre_mle.env_model import BetaEnv, TwoPointFree, TwoPointKnown


@pytest.fixture
def ex1():
    return TwoPointKnown(0.4, 0.7, 0.3)


@pytest.fixture
def ex2():
    return TwoPointFree(0.3, 0.4, 0.7)


@pytest.fixture
def ex3():
    return BetaEnv(5.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
