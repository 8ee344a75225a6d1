import numpy as np
import pytest

from reachcert import LinearSystem, NoiseModel, TargetBall


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def random_stable_matrix(n: int, rng, rho: float = 0.9) -> np.ndarray:
    A = rng.standard_normal((n, n))
    radius = max(abs(np.linalg.eigvals(A)))
    return A * (rho / radius)


@pytest.fixture
def random_walk():
    return LinearSystem(A=[[1.0]], B=[[1.0]], noise=NoiseModel.uniform([1.0]))


@pytest.fixture
def stable_2d():
    return LinearSystem(
        A=[[0.5, 0.1], [0.0, 0.3]], B=np.eye(2), noise=NoiseModel.uniform([1.0, 1.0])
    )


@pytest.fixture
def rotation_system():
    return LinearSystem(
        A=rotation_matrix(np.pi / 4), B=np.eye(2), noise=NoiseModel.uniform([1.0, 1.0])
    )


@pytest.fixture
def unit_ball_1d():
    return TargetBall(center=[0.0], radius=1.0)


@pytest.fixture
def unit_ball_2d():
    return TargetBall(center=[0.0, 0.0], radius=1.0)
