import numpy as np
import pytest

from lsecond import LseProblem


def random_problem(rng, m, n, s, rnorm=None):
    """Gaussian LSE problem; ``m + s >= n`` keeps the stacked matrix full rank."""
    A = rng.standard_normal((m, n))
    B = rng.standard_normal((s, n))
    b = rng.standard_normal(m)
    d = rng.standard_normal(s)
    return LseProblem(A, B, b, d)


def random_shape(rng, max_m=12, max_n=8, max_s=4):
    n = int(rng.integers(1, max_n + 1))
    s = int(rng.integers(0, min(max_s, n) + 1))
    m = int(rng.integers(max(n - s, 1), max_m + 1))
    return m, n, s


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


@pytest.fixture
def identity_problem():
    return LseProblem(np.eye(2), np.array([[1.0, 0.0]]), np.array([3.0, 4.0]), np.array([7.0]))


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
