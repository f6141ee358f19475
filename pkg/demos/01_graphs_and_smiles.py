"""Molecular graphs 101: build graphs, round-trip SMILES, check validity,
compare canonical keys, and read off structural statistics."""
import numpy as np

from mdvae.chem import (
    AtomRegistry,
    MolecularGraph,
    canonical_key,
    emit_smiles,
    graph_statistics,
    is_valid,
    parse_smiles,
)
from mdvae.chem.random_graphs import random_connected_graph

registry = AtomRegistry.qm9()

print("== parsing ==")
for text in ["CO", "O=C=O", "C1CC1", "CC(=O)N", "C#N"]:
    g = parse_smiles(text, registry)
    print(f"{text:10s} -> {g.num_atoms} atoms, {g.num_bonds} bonds, "
          f"valid={is_valid(g)}, back='{emit_smiles(g)}'")

print("\n== validity is a valence + connectivity check ==")
overfull = MolecularGraph([2, 0, 0], [(0, 1, 2), (0, 2, 2)], registry)  # O with 4 bonds
print("oxygen with two double bonds valid?", is_valid(overfull))

print("\n== canonical keys ignore node numbering ==")
g = parse_smiles("CC(=O)N", registry)
perm = g.permute([3, 1, 0, 2])
print("permuted copy equal key:", canonical_key(g) == canonical_key(perm))
other = parse_smiles("CC(=N)O", registry)
print("different molecule equal key:", canonical_key(g) == canonical_key(other))

print("\n== structural statistics ==")
rng = np.random.default_rng(0)
g = random_connected_graph(rng, registry, 8)
stats = graph_statistics(g)
print("smiles:", emit_smiles(g))
print("degree histogram:", stats.degree_histogram.tolist())
print("clustering:", np.round(stats.clustering, 3).tolist())
print("4-node orbit counts:", stats.orbit_counts)
