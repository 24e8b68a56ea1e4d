import numpy as np
import pytest

from spinmf import IsingModel
from spinmf.seeding import rng_for


def random_model(n: int, seed: int, coupling_scale: float = 0.8,
                 field_scale: float = 0.5, beta: float = 1.0) -> IsingModel:
    """Random upper-triangle instance for property tests."""
    rng = rng_for(seed, 99)
    J = np.zeros((n, n))
    J[np.triu_indices(n, k=1)] = rng.normal(0.0, coupling_scale, n * (n - 1) // 2)
    h = rng.normal(0.0, field_scale, n)
    return IsingModel(J=J, h=h, beta=beta)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
