import numpy as np
import pytest

from depthguard.data import Dataset, sample_directions


class ZeroNoise:
    """Injectable stand-in for RandomSource whose every draw is zero."""

    def laplace(self, size=None):
        return 0.0 if size is None else np.zeros(size)

    def normal(self, size=None):
        return 0.0 if size is None else np.zeros(size)

    def random(self, size=None):
        return 0.5 if size is None else np.full(size, 0.5)

    def permutation(self, x):
        return np.array(x)

    def spawn(self, label):
        return self


@pytest.fixture
def zero_noise():
    return ZeroNoise()


@pytest.fixture
def line_data():
    return Dataset.from_rows([[1.0], [2.0], [3.0]])


@pytest.fixture
def five_data():
    return Dataset.from_rows([[0.0], [1.0], [2.0], [3.0], [4.0]])


@pytest.fixture
def signs():
    return sample_directions(4, 1, seed=0)
