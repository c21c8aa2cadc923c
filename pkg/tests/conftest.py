import matplotlib
import numpy as np
import pytest

from diffpos.cones import ConeFieldSpec, ConeSpec
from diffpos.geometry import ManifoldSpec
from diffpos.systems import get_system

matplotlib.use("Agg")


@pytest.fixture
def r2():
    return ManifoldSpec.euclidean(2)


@pytest.fixture
def spd2():
    return ManifoldSpec.spd(2)


@pytest.fixture
def orthant_field():
    return ConeFieldSpec.constant(ConeSpec.orthant(2))


@pytest.fixture(scope="session")
def bistable():
    return get_system("bistable_tanh", gain=2.0)


@pytest.fixture(scope="session")
def metzler():
    return get_system("linear_metzler")


@pytest.fixture(scope="session")
def rotation():
    return get_system("rotation")


@pytest.fixture(scope="session")
def spd_relax():
    return get_system("spd_geodesic_relax")


@pytest.fixture
def rng():
    return np.random.default_rng(0)
