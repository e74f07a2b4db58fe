import numpy as np
import pytest

from funkmean import GroupedScores


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy_scores():
    return GroupedScores([np.array([[1.0], [2.0], [3.0]]), np.array([[2.0], [3.0], [4.0]])])
