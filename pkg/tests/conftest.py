import numpy as np
import pytest

from regime_forecast.markov import GmmEmission, HsmmModel, SojournDensity


def random_model(rng, M, k=1, family="geometric", U=8, semi=None):
    """Random valid model; ``semi`` defaults to explicit durations for non-geometric families."""
    semi = family != "geometric" if semi is None else semi
    A = rng.dirichlet(np.ones(M), size=M)
    if semi:
        np.fill_diagonal(A, 0.0)
        A /= A.sum(axis=1, keepdims=True)
    em = GmmEmission(rng.dirichlet(np.ones(k), size=M), rng.normal(size=(M, k)),
                     rng.uniform(0.3, 2.0, size=(M, k)))
    sojourn = None
    if semi:
        if family == "logarithmic":
            params = np.c_[rng.uniform(0.1, 0.9, M), rng.integers(1, 3, M)]
        elif family == "geometric":
            params = rng.uniform(0.1, 0.9, (M, 1))
        else:
            params = rng.uniform(0.5, 3.0, (M, 2))
        sojourn = SojournDensity(family, params, U)
    return HsmmModel(A, rng.dirichlet(np.ones(M)), em, sojourn, "semi" if semi else "plain")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
