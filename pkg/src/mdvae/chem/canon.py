"""Canonical keys for labeled molecular graphs.

Iterative color refinement (atom type joined with the sorted multiset of
(bond order, neighbor color) pairs) followed by deterministic
individualization-and-refinement backtracking whenever a color class stays
ambiguous. The key is the full certificate of the canonically relabeled
graph, so equal keys mean isomorphic graphs exactly, not just with high
probability.
"""
from __future__ import annotations

from .graph import ChemError, MolecularGraph

DEFAULT_MAX_NODES = 64


class SizeOverflowError(ChemError):
    pass


def _refine(g: MolecularGraph, colors: list[int]) -> list[int]:
    """Run color refinement to a fixed point; colors are dense ints."""
    n = g.num_atoms
    adj = g.adjacency()
    while True:
        signatures = []
        for v in range(n):
            neigh = sorted((order, colors[u]) for u, order in adj[v])
            signatures.append((colors[v], tuple(neigh)))
        ranking = {sig: rank for rank, sig in enumerate(sorted(set(signatures)))}
        new_colors = [ranking[sig] for sig in signatures]
        if new_colors == colors:
            return colors
        colors = new_colors


def _certificate(g: MolecularGraph, order: list[int]) -> bytes:
    """Serialize g relabeled so that order[k] becomes node k."""
    pos = {v: k for k, v in enumerate(order)}
    atoms = bytes(g.atoms[v] for v in order)
    bonds = sorted((pos[i], pos[j], o) if pos[i] < pos[j] else (pos[j], pos[i], o)
                   for i, j, o in g.bonds)
    body = bytearray()
    body.append(len(order))
    body.extend(atoms)
    for i, j, o in bonds:
        body.extend((i, j, o))
    return bytes(body)


def _canonical_order(g: MolecularGraph, colors: list[int]) -> tuple[bytes, list[int]]:
    """Smallest certificate over all individualization branches."""
    colors = _refine(g, colors)
    n = g.num_atoms
    cells: dict[int, list[int]] = {}
    for v in range(n):
        cells.setdefault(colors[v], []).append(v)
    target = None
    for color in sorted(cells):
        if len(cells[color]) > 1:
            target = cells[color]
            break
    if target is None:
        order = sorted(range(n), key=lambda v: colors[v])
        return _certificate(g, order), order

    best = None
    best_order = None
    for v in target:
        branch = list(colors)
        branch[v] = -1  # individualize: strictly smaller than every dense color
        cert, order = _canonical_order(g, branch)
        if best is None or cert < best:
            best, best_order = cert, order
    return best, best_order


def canonical_key(g: MolecularGraph, max_nodes: int = DEFAULT_MAX_NODES) -> bytes:
    """Isomorphism-invariant identity of g as an opaque byte string."""
    if g.num_atoms > max_nodes:
        raise SizeOverflowError(
            f"graph has {g.num_atoms} nodes, canonical_key supports up to {max_nodes}")
    if g.num_atoms == 0:
        return b"\x00"
    initial = list(g.atoms)
    cert, _ = _canonical_order(g, initial)
    return cert
