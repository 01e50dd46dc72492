import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from emgram.model import LinearSystem

settings.register_profile("emgram", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("emgram")


@pytest.fixture
def four_state():
    """Four-state example with ``W_X = B C``."""
    A = -0.5 * np.eye(4)
    B = np.array([[0.0], [1.0], [0.0], [1.0]])
    C = np.array([[0.0, 0.0, 1.0, 1.0]])
    return LinearSystem(A, B, C)


@pytest.fixture
def scalar():
    return LinearSystem([[-1.0]], [[1.0]], [[1.0]])


def random_stable(seed, N, M, Q=None):
    """Random stable system: shifted Gaussian matrix with abscissa -1."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((N, N))
    A = G - (np.linalg.eigvals(G).real.max() + 1.0) * np.eye(N)
    Q = M if Q is None else Q
    return LinearSystem(A, rng.standard_normal((N, M)), rng.standard_normal((Q, N)))
