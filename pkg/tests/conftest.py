"""
Shared fixtures
"""
import numpy as np
import pytest

from prior_lab.services.clustering import Partition


@pytest.fixture
def rng():
    """Seeded generator, fresh per test"""
    return np.random.default_rng(20240601)


@pytest.fixture
def four_points():
    """{(0,0),(0,2),(10,0),(10,2)} with the left/right split (objective 4)"""
    X = np.array([[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]])
    return X, Partition(np.array([0, 0, 1, 1]), 2)


@pytest.fixture
def zero_temp_fixture():
    """Three points at -10 and one at +10 with centroids on both"""
    X = np.array([[-10.0], [-10.0], [-10.0], [10.0]])
    W = np.array([[-10.0, 10.0]])
    return X, W


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "runs"
