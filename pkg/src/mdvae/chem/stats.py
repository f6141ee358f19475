"""Structural statistics used by the distribution-comparison metrics."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph import MolecularGraph

# Connected 4-node graphlets, keyed by (edge count, sorted degree sequence)
# of the induced subgraph. Anything with < 3 edges is disconnected.
_GRAPHLET_BY_SHAPE = {
    (3, (1, 1, 2, 2)): "path4",
    (3, (1, 1, 1, 3)): "star4",
    (4, (2, 2, 2, 2)): "cycle4",
    (4, (1, 2, 2, 3)): "tailed_triangle",
    (5, (2, 2, 3, 3)): "diamond",
    (6, (3, 3, 3, 3)): "clique4",
}
GRAPHLET_NAMES = ("path4", "star4", "cycle4", "tailed_triangle", "diamond", "clique4")


@dataclass
class GraphStatistics:
    degree_histogram: np.ndarray        # counts, index = degree
    clustering: np.ndarray              # per-node coefficient in [0, 1]
    orbit_counts: dict[str, int]        # induced connected 4-node graphlets

    @property
    def total_orbits(self) -> int:
        return sum(self.orbit_counts.values())


def graph_statistics(g: MolecularGraph) -> GraphStatistics:
    """Degree histogram, per-node clustering, exact 4-node orbit counts."""
    n = g.num_atoms
    adj = g.adjacency()
    neighbor_sets = [set(u for u, _ in adj[v]) for v in range(n)]
    degrees = np.array([len(neighbor_sets[v]) for v in range(n)], dtype=int)

    max_deg = int(degrees.max()) if n else 0
    hist = np.bincount(degrees, minlength=max_deg + 1) if n else np.zeros(1, dtype=int)

    clustering = np.zeros(n)
    for v in range(n):
        d = degrees[v]
        if d < 2:
            continue
        nbrs = sorted(neighbor_sets[v])
        links = sum(1 for a, b in combinations(nbrs, 2) if b in neighbor_sets[a])
        clustering[v] = 2.0 * links / (d * (d - 1))

    counts = {name: 0 for name in GRAPHLET_NAMES}
    for quad in combinations(range(n), 4):
        edges = 0
        deg = [0, 0, 0, 0]
        for a, b in combinations(range(4), 2):
            if quad[b] in neighbor_sets[quad[a]]:
                edges += 1
                deg[a] += 1
                deg[b] += 1
        if edges < 3:
            continue
        name = _GRAPHLET_BY_SHAPE.get((edges, tuple(sorted(deg))))
        if name is not None:
            counts[name] += 1
    return GraphStatistics(hist, clustering, counts)
