import numpy as np
import pytest

from frade.experiments import function_family


@pytest.fixture(scope="session")
def family():
    """Shared smooth test functions on [0, 1], all vanishing at t = 0."""
    return function_family()


@pytest.fixture(scope="session")
def time_nodes():
    def make(n, horizon=1.0):
        t = np.linspace(0.0, horizon, n)
        return t, t[1] - t[0]

    return make
