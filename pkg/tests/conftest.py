from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from svfkit.tuples import MatrixTuple

DATA = Path(__file__).parent / "data"


def max_states_mats(scale=1):
    """diag with a single 2 at slot i, times scale."""
    out = []
    for i in range(3):
        D = np.diag([Fraction(2) if j == i else Fraction(1) for j in range(3)]).astype(object)
        out.append(D * Fraction(scale))
    return out


def irred_mats(lam=2):
    return [
        np.array([[0, 0, lam], [1, 0, 0], [0, lam, 0]], dtype=object),
        np.array([[0, 1, 0], [0, 0, lam], [lam, 0, 0]], dtype=object),
    ]


def le_irred_mats(a, b, c):
    A1 = np.array([[0, a, 0], [0, 0, b], [c, 0, 0]], dtype=object)
    return [A1, A1.T.copy()]


def random_rational(rng, d, lo=-9, hi=9, den=10):
    """Random invertible rational d×d matrix with entries k/den."""
    while True:
        M = np.array([[Fraction(int(x), den) for x in row] for row in rng.integers(lo, hi + 1, size=(d, d))],
                     dtype=object)
        if abs(np.linalg.det(M.astype(float))) > 1e-3:
            return M


def random_isometry(rng, d):
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    return Q * np.sign(np.diag(R))


def random_contractive_float(rng, d, N, scale=0.6):
    mats = []
    for _ in range(N):
        A = rng.normal(size=(d, d))
        mats.append(scale * A / np.linalg.svd(A, compute_uv=False)[0])
    return MatrixTuple.from_floats(mats)


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture
def max_states():
    return MatrixTuple.from_rationals(max_states_mats())


@pytest.fixture
def irred():
    return MatrixTuple.from_rationals(irred_mats())


# filled by the acceptance suite, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda x: int(x.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
