import numpy as np
import pytest

from efa_relay.channel import ChannelRealization, NoiseModel, PowerBudget

SYMMETRIC = PowerBudget(0.5, 0.1)
ASYMMETRIC = PowerBudget(5.0, 0.01)
NOISE = NoiseModel(1e-6)


def random_channel(rng, r, d_RS=5.0, d_DR=5.0):
    def draw():
        return (rng.standard_normal(r) + 1j * rng.standard_normal(r)) / np.sqrt(2.0)

    return ChannelRealization(d_RS**-1.5 * draw(), d_DR**-1.5 * draw())


def random_hpd(rng, n, shift=0.1):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + shift * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
