"""Independent brute-force oracles shared by the test suite.

These deliberately avoid the library's own algorithms: isomorphism is a
backtracking search over node bijections, graphlet classification goes
through networkx.
"""
from __future__ import annotations

from itertools import combinations

import networkx as nx

from mdvae.chem import MolecularGraph


def labeled_isomorphic(g1: MolecularGraph, g2: MolecularGraph) -> bool:
    """Exhaustive search for an atom- and bond-label preserving bijection."""
    n = g1.num_atoms
    if n != g2.num_atoms or g1.num_bonds != g2.num_bonds:
        return False
    if sorted(g1.atoms) != sorted(g2.atoms):
        return False

    adj1 = {(i, j): o for i, j, o in g1.bonds} | {(j, i): o for i, j, o in g1.bonds}
    adj2 = {(i, j): o for i, j, o in g2.bonds} | {(j, i): o for i, j, o in g2.bonds}

    mapping: dict[int, int] = {}
    used = [False] * n

    def extend(v: int) -> bool:
        if v == n:
            return True
        for w in range(n):
            if used[w] or g1.atoms[v] != g2.atoms[w]:
                continue
            consistent = True
            for u, target in mapping.items():
                if adj1.get((v, u)) != adj2.get((w, target)):
                    consistent = False
                    break
            if consistent:
                mapping[v] = w
                used[w] = True
                if extend(v + 1):
                    return True
                del mapping[v]
                used[w] = False
        return False

    return extend(0)


def nx_graphlet_counts(g: MolecularGraph) -> dict[str, int]:
    """Classify every induced 4-node subgraph via networkx isomorphism."""
    gx = nx.Graph()
    gx.add_nodes_from(range(g.num_atoms))
    gx.add_edges_from((i, j) for i, j, _ in g.bonds)

    references = {
        "path4": nx.path_graph(4),
        "star4": nx.star_graph(3),
        "cycle4": nx.cycle_graph(4),
        "tailed_triangle": nx.Graph([(0, 1), (1, 2), (2, 0), (2, 3)]),
        "diamond": nx.Graph([(0, 1), (1, 2), (2, 0), (0, 3), (1, 3)]),
        "clique4": nx.complete_graph(4),
    }
    counts = {name: 0 for name in references}
    for quad in combinations(range(g.num_atoms), 4):
        sub = gx.subgraph(quad)
        if not nx.is_connected(sub):
            continue
        for name, ref in references.items():
            if nx.is_isomorphic(sub, ref):
                counts[name] += 1
                break
    return counts


def nx_clustering(g: MolecularGraph) -> list[float]:
    gx = nx.Graph()
    gx.add_nodes_from(range(g.num_atoms))
    gx.add_edges_from((i, j) for i, j, _ in g.bonds)
    cc = nx.clustering(gx)
    return [cc[v] for v in range(g.num_atoms)]
