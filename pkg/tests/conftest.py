import sys
import numpy as np
import pytest

from wep.epcheck import random_pd
from wep.hermitian import Weight


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def low_rank(rng, m, n, r):
    if r == 0:
        return np.zeros((m, n), dtype=np.complex128)
    return crandn(rng, m, r) @ crandn(rng, r, n)


def random_weight(rng, n, ctx="l2"):
    return Weight.from_matrix(random_pd(n, rng), ctx)


def rel(x, y):
    return np.linalg.norm(x - y, 2) / (1.0 + max(np.linalg.norm(x, 2), np.linalg.norm(y, 2)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(lines):
        terminalreporter.write_line(lines[num])
