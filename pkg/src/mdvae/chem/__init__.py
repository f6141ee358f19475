from .graph import (
    AtomRegistry,
    AtomSpec,
    BOND_ORDERS,
    ChemError,
    HYDROGEN_MASS,
    MolecularGraph,
    ValenceError,
    is_valid,
)
from .smiles import SmilesError, emit_smiles, parse_smiles
from .canon import SizeOverflowError, canonical_key
from .stats import GRAPHLET_NAMES, GraphStatistics, graph_statistics

__all__ = [
    "AtomRegistry",
    "AtomSpec",
    "BOND_ORDERS",
    "ChemError",
    "HYDROGEN_MASS",
    "MolecularGraph",
    "ValenceError",
    "is_valid",
    "SmilesError",
    "emit_smiles",
    "parse_smiles",
    "SizeOverflowError",
    "canonical_key",
    "GRAPHLET_NAMES",
    "GraphStatistics",
    "graph_statistics",
]
