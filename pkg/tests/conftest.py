import numpy as np
import pytest

from torflux.groupoid import GroupoidModel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def t2():
    return GroupoidModel.symplectic_torus()


@pytest.fixture(scope="session")
def t4():
    return GroupoidModel.symplectic_torus(dim=4)
