import numpy as np
import pytest

from mdvae.chem import AtomRegistry
from mdvae.chem.random_graphs import random_connected_graph


@pytest.fixture(scope="session")
def qm9_registry():
    return AtomRegistry.qm9()


@pytest.fixture(scope="session")
def zinc_registry():
    return AtomRegistry.zinc()


def make_random_graphs(registry, count, max_atoms=9, seed=0, min_atoms=1):
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(count):
        n = int(rng.integers(min_atoms, max_atoms + 1))
        graphs.append(random_connected_graph(rng, registry, n))
    return graphs
