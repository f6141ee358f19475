"""Molecular graph data model: typed atoms, typed bonds, valence rules."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

BOND_ORDERS = (1, 2, 3)


class ChemError(ValueError):
    pass


class ValenceError(ChemError):
    pass


@dataclass(frozen=True)
class AtomSpec:
    """One row of the atom alphabet: element symbol, mass (amu), max bond-order sum."""

    symbol: str
    mass: float
    max_valence: int

    def __post_init__(self):
        if self.max_valence < 1:
            raise ChemError(f"max_valence must be >= 1, got {self.max_valence}")


# Heavy-atom alphabets. QM9 molecules use C/N/O/F; ZINC adds the heavier block.
_QM9_SPECS = (
    AtomSpec("C", 12.011, 4),
    AtomSpec("N", 14.007, 3),
    AtomSpec("O", 15.999, 2),
    AtomSpec("F", 18.998, 1),
)
_ZINC_EXTRA = (
    AtomSpec("P", 30.974, 5),
    AtomSpec("S", 32.06, 6),
    AtomSpec("Cl", 35.45, 1),
    AtomSpec("Br", 79.904, 1),
    AtomSpec("I", 126.904, 1),
)

HYDROGEN_MASS = 1.008


class AtomRegistry:
    """Ordered table of AtomSpec; atom-type indices everywhere refer to one of these."""

    def __init__(self, specs: Sequence[AtomSpec]):
        symbols = [s.symbol for s in specs]
        if len(set(symbols)) != len(symbols):
            raise ChemError("duplicate symbols in registry")
        self._specs = tuple(specs)
        self._index = {s.symbol: i for i, s in enumerate(specs)}

    @classmethod
    def qm9(cls) -> "AtomRegistry":
        return cls(_QM9_SPECS)

    @classmethod
    def zinc(cls) -> "AtomRegistry":
        return cls(_QM9_SPECS + _ZINC_EXTRA)

    def __len__(self):
        return len(self._specs)

    def __iter__(self):
        return iter(self._specs)

    def __eq__(self, other):
        return isinstance(other, AtomRegistry) and self._specs == other._specs

    def spec(self, index: int) -> AtomSpec:
        return self._specs[index]

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise ChemError(f"unknown element {symbol!r}") from None

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(s.symbol for s in self._specs)

    def to_json_obj(self) -> list:
        return [[s.symbol, s.mass, s.max_valence] for s in self._specs]

    @classmethod
    def from_json_obj(cls, obj) -> "AtomRegistry":
        return cls([AtomSpec(sym, float(m), int(v)) for sym, m, v in obj])


class MolecularGraph:
    """Immutable labeled simple graph: atom-type indices plus (i, j, order) bonds.

    Bonds are stored sorted with i < j; adjacency is symmetric by construction.
    Hydrogens are implicit (they fill the remaining valence) and never appear
    as nodes.
    """

    __slots__ = ("atoms", "bonds", "registry", "_adj")

    def __init__(self, atoms: Sequence[int], bonds: Iterable[tuple[int, int, int]],
                 registry: AtomRegistry):
        atoms = tuple(int(a) for a in atoms)
        n = len(atoms)
        for a in atoms:
            if not 0 <= a < len(registry):
                raise ChemError(f"atom index {a} outside registry")
        norm = []
        seen = set()
        for i, j, order in bonds:
            i, j, order = int(i), int(j), int(order)
            if i == j:
                raise ChemError(f"self-loop on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ChemError(f"bond ({i},{j}) outside node range")
            if order not in BOND_ORDERS:
                raise ChemError(f"bond order {order} not in {BOND_ORDERS}")
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise ChemError(f"duplicate bond ({i},{j})")
            seen.add((i, j))
            norm.append((i, j, order))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "bonds", tuple(sorted(norm)))
        object.__setattr__(self, "registry", registry)
        object.__setattr__(self, "_adj", None)

    def __setattr__(self, name, value):
        raise AttributeError("MolecularGraph is immutable")

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    def __eq__(self, other):
        """Labeled equality (same node numbering); use canonical_key for isomorphism."""
        return (isinstance(other, MolecularGraph) and self.atoms == other.atoms
                and self.bonds == other.bonds
                and self.registry == other.registry)

    def __hash__(self):
        return hash((self.atoms, self.bonds))

    def __repr__(self):
        return f"MolecularGraph(atoms={len(self.atoms)}, bonds={len(self.bonds)})"

    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per-node list of (neighbor, order) pairs, cached."""
        if self._adj is None:
            adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
            for i, j, order in self.bonds:
                adj[i].append((j, order))
                adj[j].append((i, order))
            for lst in adj:
                lst.sort()
            object.__setattr__(self, "_adj", adj)
        return self._adj

    def degree(self, v: int) -> int:
        return len(self.adjacency()[v])

    def bond_order_sum(self, v: int) -> int:
        return sum(order for _, order in self.adjacency()[v])

    def max_valence(self, v: int) -> int:
        return self.registry.spec(self.atoms[v]).max_valence

    def implicit_hydrogens(self, v: int) -> int:
        return self.max_valence(v) - self.bond_order_sum(v)

    def symbol(self, v: int) -> str:
        return self.registry.spec(self.atoms[v]).symbol

    def permute(self, perm: Sequence[int]) -> "MolecularGraph":
        """Relabel nodes: new index perm[v] holds old node v."""
        perm = list(perm)
        if sorted(perm) != list(range(self.num_atoms)):
            raise ChemError("not a permutation")
        atoms = [0] * self.num_atoms
        for old, new in enumerate(perm):
            atoms[new] = self.atoms[old]
        bonds = [(perm[i], perm[j], order) for i, j, order in self.bonds]
        return MolecularGraph(atoms, bonds, self.registry)

    def subgraph(self, nodes: Sequence[int]) -> "MolecularGraph":
        """Induced subgraph; nodes keep their relative order."""
        nodes = list(nodes)
        remap = {v: k for k, v in enumerate(nodes)}
        atoms = [self.atoms[v] for v in nodes]
        bonds = [(remap[i], remap[j], order) for i, j, order in self.bonds
                 if i in remap and j in remap]
        return MolecularGraph(atoms, bonds, self.registry)

    def connected_component(self, root: int = 0) -> list[int]:
        """BFS order of the component containing root."""
        seen = {root}
        order = [root]
        queue = [root]
        while queue:
            v = queue.pop(0)
            for u, _ in self.adjacency()[v]:
                if u not in seen:
                    seen.add(u)
                    order.append(u)
                    queue.append(u)
        return order

    def is_connected(self) -> bool:
        return self.num_atoms == 0 or len(self.connected_component(0)) == self.num_atoms

    # --- JSON interchange: {"atoms": ["C", ...], "bonds": [[i, j, order], ...]} ---

    def to_json_obj(self) -> dict:
        return {
            "atoms": [self.symbol(v) for v in range(self.num_atoms)],
            "bonds": [[i, j, order] for i, j, order in self.bonds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: dict, registry: AtomRegistry) -> "MolecularGraph":
        atoms = [registry.index(sym) for sym in obj["atoms"]]
        bonds = [tuple(b) for b in obj["bonds"]]
        return cls(atoms, bonds, registry)

    @classmethod
    def from_json(cls, text: str, registry: AtomRegistry) -> "MolecularGraph":
        return cls.from_json_obj(json.loads(text), registry)


def is_valid(g: MolecularGraph) -> bool:
    """Chemical validity: valence respected at every node, simple, connected.

    Simplicity holds by construction; connectivity is part of validity (the
    decoder discards anything outside node 0's component before returning).
    """
    if g.num_atoms == 0:
        return False
    for v in range(g.num_atoms):
        if g.bond_order_sum(v) > g.max_valence(v):
            return False
    return g.is_connected()
