import numpy as np
import pytest

from sldirk.butcher import ButcherTableau


def random_sa_dirk(rng, s, diag_lo=0.05, diag_hi=2.0, name="random"):
    """Random stiffly accurate DIRK tableau with positive diagonal.

    Off-diagonal entries are uniform in [-1, 1]; the last row is rescaled so
    it sums to 1 (stiff accuracy forces c_s = 1 and b = last row).
    """
    A = np.zeros((s, s))
    for k in range(s):
        A[k, k] = rng.uniform(diag_lo, diag_hi)
        A[k, :k] = rng.uniform(-1.0, 1.0, size=k)
    if s > 1:
        while True:
            row = rng.uniform(-1.0, 1.0, size=s - 1)
            if abs(row.sum()) > 0.1:
                break
        A[s - 1, :s - 1] = row * (1.0 - A[s - 1, s - 1]) / row.sum()
    else:
        A[0, 0] = 1.0
    return ButcherTableau.from_matrix(name, A)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
