import numpy as np
import pytest

from qkl import canonical_model, steady_covariance


@pytest.fixture(scope="session")
def model():
    """Hand-checkable fixture: drift -2I, dispersion 2*J2, sigma = I."""
    return canonical_model()


@pytest.fixture(scope="session")
def kernel(model):
    return steady_covariance(model)


def random_antisymmetric(rng, n):
    g = rng.standard_normal((n, n))
    return g - g.T


def random_symmetric(rng, n):
    g = rng.standard_normal((n, n))
    return 0.5 * (g + g.T)


def random_stable_models(seed, count, sizes=((2, 2), (2, 4), (4, 2), (4, 4))):
    """Seeded stream of physically consistent models with Hurwitz drift."""
    from qkl import build_model

    rng = np.random.default_rng(seed)
    models = []
    while len(models) < count:
        n, m = sizes[rng.integers(len(sizes))]
        theta = random_antisymmetric(rng, n)
        if np.linalg.svd(theta, compute_uv=False)[-1] < 1e-6:
            continue
        energy = random_symmetric(rng, n)
        coupling = rng.standard_normal((m, n))
        candidate = build_model(theta, energy, coupling)
        if candidate.is_stable(margin=1e-6):
            models.append(candidate)
    return models
