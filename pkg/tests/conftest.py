import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tubekit import BinaryMask, PhantomSpec, generate


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260819)


@pytest.fixture(scope="session")
def cylinder_phantom():
    return generate(PhantomSpec("cylinder", dims=(40, 40, 64), radius_mm=4.0, length_mm=44.0))


@pytest.fixture(scope="session")
def y_branch_phantom():
    return generate(
        PhantomSpec("y_branch", dims=(96, 96, 96), radius_mm=3.0, length_mm=56.0, angle_deg=30.0)
    )


def mask_of(data, spacing=(1.0, 1.0, 1.0)) -> BinaryMask:
    return BinaryMask(np.asarray(data), spacing)
