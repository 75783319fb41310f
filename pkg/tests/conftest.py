import numpy as np
import pytest

from dcaplan.environment import load_scenario


@pytest.fixture(scope="session")
def maze():
    return load_scenario("maze")


@pytest.fixture(scope="session")
def open_scene():
    return load_scenario("open")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
