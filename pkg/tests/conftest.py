import numpy as np
import pytest

from contagionfit import DiffusionData, Network

# 5-node fixture: a weighted triangle (1,2,3) plus a strong pair (4,5)
TOY_WEIGHTS = np.array(
    [
        [0.0, 0.5, 0.5, 0.0, 0.0],
        [0.5, 0.0, 0.5, 0.0, 0.0],
        [0.5, 0.5, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.8],
        [0.0, 0.0, 0.0, 0.8, 0.0],
    ]
)
# 1-based (4, 5, 2, 3, 1): pair first, then the triangle
TOY_ORDER = np.array([3, 4, 1, 2, 0])


@pytest.fixture
def toy_network() -> Network:
    return Network(TOY_WEIGHTS, label="toy-5")


@pytest.fixture
def toy_data(toy_network) -> DiffusionData:
    return DiffusionData(network=toy_network, order=TOY_ORDER.copy(), label="toy")


def random_network(n: int, seed, density: float = 0.5) -> Network:
    """Small dense-ish random network for oracle tests (zero diagonal)."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.0, 1.0, size=(n, n))
    w[rng.random((n, n)) > density] = 0.0
    np.fill_diagonal(w, 0.0)
    return Network(w)
