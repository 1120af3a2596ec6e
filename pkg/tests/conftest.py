import numpy as np
import pytest

import ridgeband as rb


@pytest.fixture(scope="session")
def constants():
    return rb.compute_constants()


@pytest.fixture(scope="session")
def kernel():
    return rb.Kernel()


@pytest.fixture(scope="session")
def gauss21():
    return rb.ElongatedGaussian(2.0, 1.0)


@pytest.fixture(scope="session")
def ring():
    return rb.Ring(1.0, 0.1)


@pytest.fixture()
def rng():
    return np.random.default_rng(171)
