import numpy as np
import pytest

from margulis.config import bundled, bundled_path

import oracles


@pytest.fixture(scope="session")
def standard_cfg():
    return bundled("standard_pair.json")


@pytest.fixture(scope="session")
def standard(standard_cfg):
    return standard_cfg.deformed()


@pytest.fixture(scope="session")
def mixed_cfg():
    return bundled("mixed_sign.json")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def exact():
    """60-digit model of the standard pair built from its axis data."""
    return oracles.from_config(bundled_path("standard_pair.json"))
