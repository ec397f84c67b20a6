import numpy as np
import pytest
from scipy import integrate

from debiased_lasso import Dataset


def quad_cdf(x):
    """Independent oracle: integrate the Gaussian density numerically."""
    f = lambda t: np.exp(-t * t / 2) / np.sqrt(2 * np.pi)
    if x <= 0:
        v, _ = integrate.quad(f, -np.inf, x, epsabs=1e-14, epsrel=1e-13)
        return v
    v, _ = integrate.quad(f, x, np.inf, epsabs=1e-14, epsrel=1e-13)
    return 1.0 - v


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def orthogonal_dataset(y):
    y = np.asarray(y, dtype=float)
    n = y.size
    return Dataset(np.sqrt(n) * np.eye(n), y)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
