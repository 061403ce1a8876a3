import math

import pytest

from mccm.weights import Discrete, LogNormal, ModelSpec, TwoPoint


def lognormal_spec(a, b):
    """Log-normal spec with sigma^2 = a log b."""
    return ModelSpec(LogNormal(math.sqrt(a * math.log(b))), b)


@pytest.fixture
def sub_spec():
    return lognormal_spec(0.2, 2)


@pytest.fixture
def super_spec():
    return lognormal_spec(1.0, 2)


@pytest.fixture
def discrete_spec():
    return ModelSpec(Discrete([(1.5, 0.5), (0.5, 0.5)]), 2)


@pytest.fixture
def salem_spec():
    return ModelSpec(TwoPoint(0.5), 4)
