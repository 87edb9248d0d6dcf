import numpy as np
import pytest

from polyfine import Ball, Cube, Ellipsoid, LpBall


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def zoo(dim=3):
    """Symmetric bodies with the origin interior and closed-form oracles."""
    mats = {2: [[2.0, 0.3], [0.0, 0.7]],
            3: [[2.0, 0.3, 0.0], [0.0, 1.0, 0.1], [0.1, 0.0, 0.7]]}
    return [Ball(dim), Ellipsoid(mats[dim]), Cube(dim), LpBall(dim, 3.0)]
