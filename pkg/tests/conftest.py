import numpy as np
import pytest

from kinlyap.model import CoplanarSteadyState, coplanar_model
from kinlyap.structure import coplanar_lambda0, decompose

REF_FE = (0.4, 0.3, 0.2, 0.6)
UNIFORM_FE = (0.25, 0.25, 0.25, 0.25)


@pytest.fixture(scope="session")
def ref_steady():
    return CoplanarSteadyState(U=1.0, f_e=REF_FE)


@pytest.fixture(scope="session")
def uniform_steady():
    return CoplanarSteadyState(U=1.0, f_e=UNIFORM_FE)


@pytest.fixture(scope="session")
def ref_model(ref_steady):
    return coplanar_model(ref_steady, 1.0)


@pytest.fixture(scope="session")
def uniform_model(uniform_steady):
    return coplanar_model(uniform_steady, 1.0)


@pytest.fixture(scope="session")
def ref_dec(ref_steady, ref_model):
    return decompose(ref_model, coplanar_lambda0(ref_steady))


@pytest.fixture(scope="session")
def uniform_dec(uniform_steady, uniform_model):
    return decompose(uniform_model, coplanar_lambda0(uniform_steady))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
