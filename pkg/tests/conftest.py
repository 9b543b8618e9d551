import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kpiguard import default_suite

GRID = 2.0**-20


@pytest.fixture(scope="session")
def suite():
    """The seed-fixed ten-KPI benchmark suite, built once per run."""
    return default_suite()


def balanced_hours(rng: np.random.Generator, hours: int, sigma: float, clip_z: float):
    """Flat-level test noise in the generator's style: hour-balanced pairs,
    clamped to sigma * clip_z, on the dyadic value grid."""
    mags = sigma * np.minimum(np.abs(rng.standard_normal((hours, 2))), clip_z)
    mags = np.round(mags / GRID) * GRID
    block = np.empty((hours, 4))
    block[:, 0:4:2] = mags
    block[:, 1:4:2] = -mags
    return rng.permuted(block, axis=1).reshape(-1)
