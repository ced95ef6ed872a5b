import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import config  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def restore_config():
    """Commands overwrite the seed and tolerances in place"""
    tolerances = dict(config.TOLERANCES)
    seed = config.RANDOM_SEED
    yield
    config.TOLERANCES.clear()
    config.TOLERANCES.update(tolerances)
    config.RANDOM_SEED = seed
