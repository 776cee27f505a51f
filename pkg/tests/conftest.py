import numpy as np
import pytest

from pddtopo import randvars as rvs


@pytest.fixture(scope="session")
def four_kinds():
    return {
        "uniform": rvs.uniform(-1.0, 3.0),
        "inverse_uniform": rvs.inverse_uniform(2.0, 4.0),
        "beta": rvs.four_param_beta(2.0, 5.0, 1.0, 4.0),
        "truncated_gaussian": rvs.truncated_gaussian(1.0, 0.4, 1.0),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
