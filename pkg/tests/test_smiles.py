import pytest

from mdvae.chem import (
    MolecularGraph,
    SmilesError,
    ValenceError,
    emit_smiles,
    is_valid,
    parse_smiles,
)

from conftest import make_random_graphs
from oracles import labeled_isomorphic


def test_two_token_chain(qm9_registry):
    g = parse_smiles("CO", qm9_registry)
    assert [g.symbol(v) for v in range(2)] == ["C", "O"]
    assert g.bonds == ((0, 1, 1),)


def test_carbon_dioxide(qm9_registry):
    g = parse_smiles("O=C=O", qm9_registry)
    assert g.num_atoms == 3
    assert g.bonds == ((0, 1, 2), (1, 2, 2))
    assert g.bond_order_sum(1) == 4


def test_cyclopropane(qm9_registry):
    g = parse_smiles("C1CC1", qm9_registry)
    # hand-derived: 3-node cycle of order-1 bonds
    assert g.num_atoms == 3
    assert g.bonds == ((0, 1, 1), (0, 2, 1), (1, 2, 1))
    assert is_valid(g)


def test_branches(qm9_registry):
    g = parse_smiles("CC(=O)N", qm9_registry)
    assert g.num_atoms == 4
    assert set(g.bonds) == {(0, 1, 1), (1, 2, 2), (1, 3, 1)}


def test_triple_bond(qm9_registry):
    g = parse_smiles("C#N", qm9_registry)
    assert g.bonds == ((0, 1, 3),)


def test_bracket_atom(qm9_registry):
    g = parse_smiles("[C]([NH2])O", qm9_registry)
    assert [g.symbol(v) for v in range(3)] == ["C", "N", "O"]


def test_two_letter_elements(zinc_registry):
    g = parse_smiles("ClCBr", zinc_registry)
    assert [g.symbol(v) for v in range(3)] == ["Cl", "C", "Br"]


def test_ring_closure_percent(qm9_registry):
    assert parse_smiles("C%10CC%10", qm9_registry).num_bonds == 3


def test_ring_bond_order_on_closure(qm9_registry):
    g = parse_smiles("C1CC=1", qm9_registry)
    assert (0, 2, 2) in g.bonds


def test_syntax_error_position(qm9_registry):
    with pytest.raises(SmilesError) as err:
        parse_smiles("CC(C", qm9_registry)
    assert "position" in str(err.value)


def test_unknown_element(qm9_registry):
    with pytest.raises(SmilesError):
        parse_smiles("CSi", qm9_registry)


def test_aromatic_rejected(qm9_registry):
    with pytest.raises(SmilesError):
        parse_smiles("c1ccccc1", qm9_registry)


def test_valence_overflow_on_parse(qm9_registry):
    with pytest.raises(ValenceError):
        parse_smiles("C#N#C", qm9_registry)
    with pytest.raises(ValenceError):
        parse_smiles("O(C)(C)C", qm9_registry)


@pytest.mark.parametrize("bad", ["", "1CC", "C((C))C)", "C=", "C..C", "[C+]C", "C[13C]"])
def test_malformed_inputs(qm9_registry, bad):
    with pytest.raises(SmilesError):
        parse_smiles(bad, qm9_registry)


def test_emit_single_carbon(qm9_registry):
    g = MolecularGraph([0], [], qm9_registry)
    assert emit_smiles(g) == "C"


def test_emit_formaldehyde_roundtrip(qm9_registry):
    g = MolecularGraph([0, 2], [(0, 1, 2)], qm9_registry)
    back = parse_smiles(emit_smiles(g), qm9_registry)
    assert labeled_isomorphic(g, back)


def test_roundtrip_random_graphs(qm9_registry):
    # round-trip isomorphism on 1000 random valid graphs up to 9 nodes
    for g in make_random_graphs(qm9_registry, 1000, max_atoms=9, seed=42):
        back = parse_smiles(emit_smiles(g), qm9_registry)
        assert labeled_isomorphic(g, back), emit_smiles(g)


def test_roundtrip_larger_zinc_graphs(zinc_registry):
    for g in make_random_graphs(zinc_registry, 60, max_atoms=12, seed=9):
        back = parse_smiles(emit_smiles(g), zinc_registry)
        assert labeled_isomorphic(g, back), emit_smiles(g)
