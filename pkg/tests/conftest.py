import numpy as np
import pytest
from hypothesis import settings

from lc_commune.graph_io import AdjacencyMatrix

# first calls pay for loading compiled kernels, so timings are noisy
settings.register_profile("lc", deadline=None)
settings.load_profile("lc")


def cliques(*sizes: int) -> AdjacencyMatrix:
    """Disjoint union of complete graphs."""
    n = sum(sizes)
    arr = np.zeros((n, n), dtype=np.int8)
    start = 0
    for s in sizes:
        arr[start:start + s, start:start + s] = 1
        start += s
    np.fill_diagonal(arr, 0)
    return AdjacencyMatrix.from_dense(arr)


def random_graph(n: int, p: float, seed: int) -> AdjacencyMatrix:
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, 1)
    return AdjacencyMatrix.from_dense((upper | upper.T).astype(np.int8))


@pytest.fixture
def two_cliques():
    return cliques(5, 5)
