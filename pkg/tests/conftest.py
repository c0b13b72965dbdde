import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from momident.minparam import minimal_basis
from momident.robot import builtin_dual_arm, offset_guess


@pytest.fixture(scope="session")
def model():
    return builtin_dual_arm()


@pytest.fixture(scope="session")
def guess(model):
    return offset_guess(model)


@pytest.fixture(scope="session")
def basis(model):
    return minimal_basis(model)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
