import numpy as np
import pytest

from letf import LeverageMap, LevyModel, LocalVol

T_5D = 5.0 / 365.0


@pytest.fixture(scope="session")
def kou_model():
    """Double-exponential jumps: lam=15, p=1/3, q=2/3, eta1=25, eta2=15."""
    return LevyModel.kou(lam=15.0, p=1.0 / 3.0, q=2.0 / 3.0, eta1=25.0, eta2=15.0)


@pytest.fixture(scope="session")
def kou_vol():
    return LocalVol(0.05, -0.02, 0.5)


@pytest.fixture(scope="session")
def vg_model():
    """Variance gamma: kappa=0.1083, theta=-0.3726, sigma=0.4344."""
    return LevyModel.variance_gamma(kappa=0.1083, theta=-0.3726, sigma=0.4344)


@pytest.fixture(scope="session")
def vg_vol():
    return LocalVol(0.005, -0.002, 0.5)


@pytest.fixture(scope="session")
def beta_grid():
    return [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def lev(beta):
    return LeverageMap(float(beta))
