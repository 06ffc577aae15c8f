import numpy as np
import pytest

from graphfuse.graph import new_graph


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_connected_graph(rng, n, extra_edges):
    """Random spanning tree plus extra random edges."""
    perm = rng.permutation(n)
    edges = [(int(perm[i]), int(perm[rng.integers(i)])) for i in range(1, n)]
    for _ in range(extra_edges):
        u, v = rng.choice(n, 2, replace=False)
        edges.append((int(u), int(v)))
    return new_graph(n, edges)
