import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tccalc.space import FiniteMetricMeasureSpace, random_space  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_pair():
    """Two points at distance 1 with unit weights (exact)."""
    return FiniteMetricMeasureSpace.from_data([[0, 1], [1, 0]], [1, 1])


@pytest.fixture
def line3():
    """Three collinear points 0, 1, 2 in the plane."""
    return FiniteMetricMeasureSpace.from_points([[0, 0], [1, 0], [2, 0]], [1.0, 2.0, 1.0])


@pytest.fixture
def plane4(rng):
    return random_space(rng, 4)
