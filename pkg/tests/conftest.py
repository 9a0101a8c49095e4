import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20131015)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hpd(rng, n, jitter=0.5):
    M = crandn(rng, n, n)
    return M @ M.conj().T + jitter * np.eye(n)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
