import math

import pytest

from entropica.density import from_family
from entropica.families import Gaussian, Laplace, Uniform, gauss_mixture

HALF_LOG_2PIE = 0.5 * math.log(2 * math.pi * math.e)
HALF_LOG2 = 0.5 * math.log(2)


@pytest.fixture(scope="session")
def gauss():
    return from_family(Gaussian(0.0, 1.0))


@pytest.fixture(scope="session")
def unif():
    return from_family(Uniform(0.0, 1.0))


@pytest.fixture(scope="session")
def lap():
    return from_family(Laplace(0.0, 1.0))


@pytest.fixture(scope="session")
def bimodal():
    return from_family(gauss_mixture([(0.5, -1.0, 1.0), (0.5, 1.0, 1.0)]))
