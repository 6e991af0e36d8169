import numpy as np
import pytest
from hypothesis import settings

from perjacobi.operator import JacobiOperator

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


def random_operator(rng, N, real=False, size=1.0):
    """Random operator with ``|a|`` in ``[0.5, 1.5] size`` and ``|b| <= 2 size``."""
    mag = rng.uniform(0.5, 1.5, N) * size
    if real:
        a = mag * rng.choice([-1.0, 1.0], N)
        b = rng.uniform(-2, 2, N) * size
    else:
        a = mag * np.exp(2j * np.pi * rng.random(N))
        b = rng.uniform(0, 2, N) * size * np.exp(2j * np.pi * rng.random(N))
    return JacobiOperator(a, b)


def coeff_gap(p, q):
    from perjacobi.cpoly import max_coeff_diff

    return max_coeff_diff(p, q)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
