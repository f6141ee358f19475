"""SMILES I/O for the kekulized heavy-atom subset.

Supported input: registry atoms (bare organic-subset symbols or brackets
without charge/isotope/stereo), bond symbols - = #, parenthesised branches,
and numeric ring closures (1-9 plus %nn). Aromatic lowercase forms are
rejected; kekulize upstream or plug an external parser into dataset
ingestion.
"""
from __future__ import annotations

from .graph import AtomRegistry, ChemError, MolecularGraph, ValenceError

_BOND_CHARS = {"-": 1, "=": 2, "#": 3}
_AROMATIC = set("bcnops")


class SmilesError(ChemError):
    """Syntax or chemistry error while reading SMILES; carries the position."""

    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.pos = pos
        self.text = text


def parse_smiles(text: str, registry: AtomRegistry) -> MolecularGraph:
    """Parse a SMILES string into a hydrogen-suppressed MolecularGraph."""
    atoms: list[int] = []
    bonds: list[tuple[int, int, int]] = []
    order_sums: list[int] = []
    stack: list[int] = []
    rings: dict[int, tuple[int, int | None, int]] = {}  # number -> (atom, order, pos)
    prev: int | None = None
    pending_order: int | None = None

    def add_bond(i: int, j: int, order: int, pos: int):
        if i == j:
            raise SmilesError("ring bond to self", text, pos)
        key = (min(i, j), max(i, j))
        if any((min(a, b), max(a, b)) == key for a, b, _ in bonds):
            raise SmilesError(f"duplicate bond between atoms {i} and {j}", text, pos)
        bonds.append((i, j, order))
        for v in (i, j):
            order_sums[v] += order
            if order_sums[v] > registry.spec(atoms[v]).max_valence:
                raise ValenceError(
                    f"valence overflow on atom {v} "
                    f"({registry.spec(atoms[v]).symbol}) at position {pos}: {text!r}")

    def add_atom(sym: str, pos: int) -> int:
        try:
            idx = registry.index(sym)
        except ChemError:
            raise SmilesError(f"unknown element {sym!r}", text, pos) from None
        atoms.append(idx)
        order_sums.append(0)
        return len(atoms) - 1

    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in _BOND_CHARS:
            if pending_order is not None:
                raise SmilesError("two bond symbols in a row", text, i)
            pending_order = _BOND_CHARS[c]
            i += 1
        elif c == "(":
            if prev is None:
                raise SmilesError("branch before any atom", text, i)
            stack.append(prev)
            i += 1
        elif c == ")":
            if not stack:
                raise SmilesError("unmatched ')'", text, i)
            if pending_order is not None:
                raise SmilesError("dangling bond before ')'", text, i)
            prev = stack.pop()
            i += 1
        elif c.isdigit() or c == "%":
            if prev is None:
                raise SmilesError("ring closure before any atom", text, i)
            if c == "%":
                if i + 2 >= n or not text[i + 1:i + 3].isdigit():
                    raise SmilesError("'%' needs two digits", text, i)
                num = int(text[i + 1:i + 3])
                width = 3
            else:
                num = int(c)
                width = 1
            if num in rings:
                other, open_order, open_pos = rings.pop(num)
                order = pending_order if pending_order is not None else open_order
                if order is None:
                    order = 1
                if (pending_order is not None and open_order is not None
                        and pending_order != open_order):
                    raise SmilesError(f"ring {num} bond order mismatch", text, i)
                add_bond(other, prev, order, i)
            else:
                rings[num] = (prev, pending_order, i)
            pending_order = None
            i += width
        elif c == "[":
            end = text.find("]", i)
            if end < 0:
                raise SmilesError("unclosed '['", text, i)
            body = text[i + 1:end]
            sym = _bracket_symbol(body, text, i)
            at = add_atom(sym, i)
            if prev is not None:
                add_bond(prev, at, pending_order or 1, i)
            prev = at
            pending_order = None
            i = end + 1
        elif c.isalpha():
            if c in _AROMATIC and c.islower():
                raise SmilesError(
                    f"aromatic atom {c!r} not supported (kekulized input only)", text, i)
            sym = c
            if i + 1 < n and text[i:i + 2] in ("Cl", "Br"):
                sym = text[i:i + 2]
            at = add_atom(sym, i)
            if prev is not None:
                add_bond(prev, at, pending_order or 1, i)
            prev = at
            pending_order = None
            i += len(sym)
        elif c == ".":
            raise SmilesError("disconnected components ('.') not supported", text, i)
        else:
            raise SmilesError(f"unexpected character {c!r}", text, i)

    if stack:
        raise SmilesError("unclosed '('", text, n)
    if rings:
        num, (_, _, pos) = next(iter(rings.items()))
        raise SmilesError(f"unclosed ring bond {num}", text, pos)
    if pending_order is not None:
        raise SmilesError("dangling bond at end of input", text, n)
    if not atoms:
        raise SmilesError("empty SMILES", text, 0)
    return MolecularGraph(atoms, bonds, registry)


def _bracket_symbol(body: str, text: str, pos: int) -> str:
    """Strip an optional implicit-H count from a bracket atom; reject the rest."""
    if any(ch in body for ch in "+-@:*"):
        raise SmilesError("charges/stereo/isotopes not supported in brackets", text, pos)
    if body and body[0].isdigit():
        raise SmilesError("isotope labels not supported", text, pos)
    sym = body
    if "H" in body[1:]:
        cut = body.index("H", 1)
        sym, hpart = body[:cut], body[cut + 1:]
        if hpart and not hpart.isdigit():
            raise SmilesError(f"malformed bracket atom [{body}]", text, pos)
    elif body == "H":
        raise SmilesError("explicit hydrogen atoms not supported", text, pos)
    if not sym:
        raise SmilesError("empty bracket atom", text, pos)
    return sym


def emit_smiles(g: MolecularGraph) -> str:
    """Write a SMILES string; parse_smiles(emit_smiles(g)) is isomorphic to g."""
    if g.num_atoms == 0:
        raise ChemError("cannot emit an empty graph")
    if not g.is_connected():
        raise ChemError("cannot emit a disconnected graph")

    adj = g.adjacency()
    visited = [False] * g.num_atoms
    # Ring-closure bonds: DFS back edges, discovered up front so both endpoints
    # know their digits.
    tree_children: list[list[tuple[int, int]]] = [[] for _ in range(g.num_atoms)]
    closures: list[list[tuple[int, int, int]]] = [[] for _ in range(g.num_atoms)]  # (digit, other, order)
    digit_next = 1

    parent = [-1] * g.num_atoms
    order_visited = []
    stack = [0]
    visited[0] = True
    while stack:
        v = stack.pop()
        order_visited.append(v)
        for u, order in reversed(adj[v]):
            if not visited[u]:
                visited[u] = True
                parent[u] = v
                tree_children[v].append((u, order))
                stack.append(u)

    seen_pairs = set()
    for v in order_visited:
        for u, order in adj[v]:
            key = (min(u, v), max(u, v))
            if parent[u] == v or parent[v] == u or key in seen_pairs:
                continue
            seen_pairs.add(key)
            digit = digit_next
            digit_next += 1
            closures[v].append((digit, u, order))
            closures[u].append((digit, v, order))

    bond_str = {1: "", 2: "=", 3: "#"}

    def ring_token(digit: int) -> str:
        return str(digit) if digit < 10 else f"%{digit:02d}"

    out: list[str] = []

    def write(v: int):
        out.append(g.symbol(v))
        for digit, _, order in sorted(closures[v]):
            out.append(bond_str[order] + ring_token(digit))
        children = tree_children[v]
        for k, (u, order) in enumerate(children):
            last = k == len(children) - 1
            if not last:
                out.append("(")
            out.append(bond_str[order])
            write(u)
            if not last:
                out.append(")")

    write(0)
    return "".join(out)
