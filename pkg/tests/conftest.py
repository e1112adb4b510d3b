import itertools

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def all_assignments(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)


def loop_energy(linear, quadratic, offset, q) -> float:
    """Term-by-term QUBO energy, no vectorization."""
    total = offset
    n = len(linear)
    for i in range(n):
        total += linear[i] * q[i]
        for j in range(n):
            if i != j:
                total += quadratic[i][j] * q[i] * q[j]
    return total


def random_qubo(rng, n, low=-1.0, high=1.0):
    from qae.encoding import QuboModel

    return QuboModel(rng.uniform(low, high, n), np.triu(rng.uniform(low, high, (n, n)), 1), 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
