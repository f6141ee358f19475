"""Random valid molecule generation for sample datasets and smoke tests."""
from __future__ import annotations

import numpy as np

from .graph import AtomRegistry, MolecularGraph, is_valid


def random_connected_graph(rng: np.random.Generator, registry: AtomRegistry,
                           n_atoms: int, extra_edge_prob: float = 0.15,
                           max_tries: int = 50,
                           type_weights: np.ndarray | None = None) -> MolecularGraph:
    """Sample a random valid connected graph with exactly n_atoms heavy atoms.

    Builds a random spanning tree under valence limits, then sprinkles ring
    bonds where both endpoints still have capacity. Retries type assignments
    that cannot host a tree (e.g. all-fluorine draws). type_weights biases
    the per-node element draw (default uniform over the registry).
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if type_weights is not None:
        type_weights = np.asarray(type_weights, dtype=float)
        type_weights = type_weights / type_weights.sum()
    for _ in range(max_tries):
        if type_weights is None:
            types = rng.integers(0, len(registry), size=n_atoms)
        else:
            types = rng.choice(len(registry), size=n_atoms, p=type_weights)
        remaining = [registry.spec(int(t)).max_valence for t in types]
        bonds: list[tuple[int, int, int]] = []
        ok = True
        for k in range(1, n_atoms):
            hosts = [j for j in range(k) if remaining[j] >= 1]
            if not hosts:
                ok = False
                break
            j = int(hosts[rng.integers(0, len(hosts))])
            max_order = min(remaining[j], remaining[k], 3)
            # bias toward single bonds, as in real molecules
            order = 1 + int(rng.choice(max_order, p=_order_weights(max_order)))
            bonds.append((j, k, order))
            remaining[j] -= order
            remaining[k] -= order
        if not ok:
            continue
        existing = {(i, j) for i, j, _ in bonds}
        for i in range(n_atoms):
            for j in range(i + 1, n_atoms):
                if (i, j) in existing:
                    continue
                if remaining[i] >= 1 and remaining[j] >= 1 and rng.random() < extra_edge_prob:
                    max_order = min(remaining[i], remaining[j], 3)
                    order = 1 + int(rng.choice(max_order, p=_order_weights(max_order)))
                    bonds.append((i, j, order))
                    remaining[i] -= order
                    remaining[j] -= order
        g = MolecularGraph(types.tolist(), bonds, registry)
        assert is_valid(g)
        return g
    raise RuntimeError(f"could not build a valid graph with {n_atoms} atoms")


def _order_weights(max_order: int) -> np.ndarray:
    w = np.array([8.0, 2.0, 1.0][:max_order])
    return w / w.sum()
