import math

import numpy as np
import pytest

SQRT2 = math.sqrt(2.0)
ICOSA_EDGE = math.sqrt(2.0 - 2.0 / math.sqrt(5.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_points(rng, n, dim=2, min_sep=1e-3):
    while True:
        x = rng.standard_normal((n, dim + 1))
        x /= np.linalg.norm(x, axis=1)[:, None]
        i, j = np.triu_indices(n, k=1)
        if np.min(np.linalg.norm(x[i] - x[j], axis=1)) >= min_sep:
            return x
