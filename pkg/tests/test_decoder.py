from itertools import product

import numpy as np
import pytest
import torch

from mdvae.chem import MolecularGraph, is_valid
from mdvae.nn import (
    DecoderState,
    GraphDecoder,
    decode_sample,
    legal_edge_mask,
    reconstruction_nll,
    teacher_decisions,
)

from conftest import make_random_graphs


def make_decoder(registry, latent=8, hidden=12, seed=0):
    torch.manual_seed(seed)
    return GraphDecoder(len(registry), latent=latent, hidden=hidden)


def fresh_state(decoder, registry, types, latent=8):
    z = torch.zeros((len(types), latent), dtype=torch.float64)
    return DecoderState.fresh(decoder, z, types, registry)


def test_mask_exhausted_focus_only_stop(qm9_registry):
    dec = make_decoder(qm9_registry)
    state = fresh_state(dec, qm9_registry, [3, 0])  # F has valence 1
    state.add_bond(dec, 0, 1, 1)                    # F now exhausted
    mask, stop = legal_edge_mask(state, 0)
    assert stop
    assert not mask.any()


def test_mask_respects_candidate_valence(qm9_registry):
    dec = make_decoder(qm9_registry)
    # focus C, candidate O with remaining valence 1: double bond masked
    state = fresh_state(dec, qm9_registry, [0, 2, 0])
    state.add_bond(dec, 1, 2, 1)                    # O uses one of its two
    mask, _ = legal_edge_mask(state, 0)
    assert mask[1, 0] and not mask[1, 1] and not mask[1, 2]


def test_mask_fresh_two_node_state(qm9_registry):
    dec = make_decoder(qm9_registry)
    state = fresh_state(dec, qm9_registry, [0, 2])  # C and O
    mask, stop = legal_edge_mask(state, 0)
    assert stop
    assert not mask[0].any()                        # no self bond
    assert mask[1, 0] and mask[1, 1] and not mask[1, 2]  # orders <= min(4, 2)


def test_mask_excludes_existing_bond(qm9_registry):
    dec = make_decoder(qm9_registry)
    state = fresh_state(dec, qm9_registry, [0, 0])
    state.add_bond(dec, 0, 1, 1)
    mask, _ = legal_edge_mask(state, 0)
    assert not mask.any()


def test_single_node_sample_valid(qm9_registry):
    dec = make_decoder(qm9_registry)
    g = decode_sample(torch.randn((1, 8), dtype=torch.float64), dec, qm9_registry,
                      temperature=1.0, seed=0)
    assert g.num_atoms == 1
    assert is_valid(g)


def test_samples_always_valid(qm9_registry):
    # smaller rehearsal of the acceptance-scale 1e4 sweep
    rng = np.random.default_rng(0)
    for trial in range(5):
        dec = make_decoder(qm9_registry, seed=trial + 1)
        with torch.no_grad():
            for p in dec.parameters():
                p.add_(torch.randn(p.shape, dtype=torch.float64))
        for i in range(400):
            n = int(rng.integers(1, 10))
            z = torch.randn((n, 8), dtype=torch.float64)
            g = decode_sample(z, dec, qm9_registry, temperature=1.0, seed=i)
            assert is_valid(g)
            assert g.num_atoms <= n


def test_temperature_zero_deterministic(qm9_registry):
    dec = make_decoder(qm9_registry, seed=3)
    z = torch.randn((7, 8), dtype=torch.float64)
    g1 = decode_sample(z, dec, qm9_registry, temperature=0.0)
    g2 = decode_sample(z, dec, qm9_registry, temperature=0.0)
    assert g1 == g2


def test_seeded_sampling_deterministic(qm9_registry):
    dec = make_decoder(qm9_registry, seed=4)
    z = torch.randn((6, 8), dtype=torch.float64)
    assert decode_sample(z, dec, qm9_registry, 1.0, seed=9) == \
           decode_sample(z, dec, qm9_registry, 1.0, seed=9)


def test_single_atom_nll_decomposition(qm9_registry):
    dec = make_decoder(qm9_registry, seed=5)
    g = MolecularGraph([2], [], qm9_registry)
    z = torch.randn((1, 8), dtype=torch.float64)
    nll = reconstruction_nll(g, z, dec)
    # two decision terms: the node type and a STOP that is forced (prob 1)
    decisions = teacher_decisions(g)
    assert decisions == [("stop", 0)]
    type_ce = torch.nn.functional.cross_entropy(
        dec.node_type_head(z), torch.tensor([2]), reduction="sum")
    assert float(nll) == pytest.approx(float(type_ce), abs=1e-12)
    assert float(nll) >= 0


def test_nll_nonnegative(qm9_registry):
    dec = make_decoder(qm9_registry, seed=6)
    for g in make_random_graphs(qm9_registry, 30, seed=7):
        z = torch.randn((g.num_atoms, 8), dtype=torch.float64)
        assert float(reconstruction_nll(g, z, dec)) >= 0


def test_three_chain_manual_trace(qm9_registry):
    # independent replay of the five-decision breadth-first sequence
    dec = make_decoder(qm9_registry, seed=8)
    g = MolecularGraph([0, 2, 0], [(0, 1, 1), (1, 2, 1)], qm9_registry)  # C-O-C
    z = torch.randn((3, 8), dtype=torch.float64)

    expected = torch.nn.functional.cross_entropy(
        dec.node_type_head(z), torch.tensor(g.atoms), reduction="sum")
    state = DecoderState.fresh(dec, z, list(g.atoms), qm9_registry)
    script = [("edge", 0, 1, 1), ("stop", 0), ("edge", 1, 2, 1), ("stop", 1), ("stop", 2)]
    assert teacher_decisions(g) == script
    for step in script:
        mask, _ = legal_edge_mask(state, step[1])
        scores, stop = dec.edge_logits(state.hidden, step[1])
        flat = torch.cat([scores.reshape(-1), stop.reshape(1)])
        legal = torch.cat([torch.from_numpy(mask.reshape(-1)), torch.tensor([True])])
        logp = torch.log_softmax(
            torch.where(legal, flat, torch.tensor(float("-inf"), dtype=flat.dtype)), 0)
        if step[0] == "edge":
            _, f, u, order = step
            expected = expected - logp[u * 3 + order - 1]
            state.add_bond(dec, f, u, order)
        else:
            expected = expected - logp[-1]
    assert float(reconstruction_nll(g, z, dec)) == pytest.approx(float(expected), abs=1e-12)


def test_teacher_forcing_order_consistency(qm9_registry):
    # replaying the gold decisions greedily rebuilds g exactly
    for g in make_random_graphs(qm9_registry, 200, seed=10):
        bonds = []
        for step in teacher_decisions(g):
            if step[0] == "edge":
                _, f, u, order = step
                bonds.append((min(f, u), max(f, u), order))
        rebuilt = MolecularGraph(g.atoms, bonds, qm9_registry)
        assert rebuilt == g


def test_latent_row_mismatch(qm9_registry):
    dec = make_decoder(qm9_registry)
    g = MolecularGraph([0, 0], [(0, 1, 1)], qm9_registry)
    with pytest.raises(ValueError):
        reconstruction_nll(g, torch.zeros((3, 8), dtype=torch.float64), dec)


def test_mask_never_negative_valence_exhaustive(qm9_registry):
    """Exhaustive simulation over every reachable <=4-node state."""
    dec = make_decoder(qm9_registry)

    def explore(types):
        state = fresh_state(dec, qm9_registry, list(types))
        seen = set()

        def walk(bonds_key):
            if bonds_key in seen:
                return
            seen.add(bonds_key)
            restore = [list(state.bonds), set(state.bond_pairs), list(state.remaining)]
            for focus in range(len(types)):
                mask, stop = legal_edge_mask(state, focus)
                assert stop
                for u in range(len(types)):
                    for k in range(3):
                        if not mask[u, k]:
                            continue
                        order = k + 1
                        assert state.remaining[focus] - order >= 0
                        assert state.remaining[u] - order >= 0
                        i, j = min(focus, u), max(focus, u)
                        state.bonds.append((i, j, order))
                        state.bond_pairs.add((i, j))
                        state.remaining[i] -= order
                        state.remaining[j] -= order
                        walk(tuple(sorted(state.bonds)))
                        state.bonds = list(restore[0])
                        state.bond_pairs = set(restore[1])
                        state.remaining = list(restore[2])

        walk(())
        return len(seen)

    total_states = 0
    for types in product(range(4), repeat=3):
        total_states += explore(types)
    for types in [(0, 0, 0, 0), (0, 1, 2, 3), (0, 0, 2, 2), (1, 1, 1, 1),
                  (0, 2, 2, 3), (3, 3, 3, 3), (0, 0, 0, 1), (2, 2, 2, 2)]:
        total_states += explore(types)
    assert total_states > 100
