import os

import numpy as np
import pytest

from bethe import BetheData, random_bethe, random_generalized

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "..", ".."))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bethe1():
    return BetheData(M=1, k=[0.9], theta={})


@pytest.fixture
def bethe2():
    return BetheData(M=2, k=[0.7853981633974483, -1.2], theta={(2, 1): 2.1})


@pytest.fixture
def bethe3(rng):
    return random_bethe(3, rng)


@pytest.fixture
def generalized2(rng):
    return random_generalized(2, 6, rng)


@pytest.fixture
def sample_config():
    return os.path.join(ROOT, "config-bethe-sample.json")


@pytest.fixture
def generalized_config():
    return os.path.join(ROOT, "config-generalized-sample.json")
