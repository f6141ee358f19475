"""Valency-masked autoregressive graph decoder.

Generation walks a breadth-first focus queue: node types come first, then
for each focus node edges are drawn from a masked softmax over
(candidate, bond order) pairs plus STOP, with one gated message-passing
round after every accepted edge. The mask admits only decisions that keep
every remaining valence nonnegative, so every sample is chemically valid
by construction.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from ..chem import AtomRegistry, MolecularGraph
from .encoder import gather_messages

NEG_INF = float("-inf")


class GraphDecoder(nn.Module):
    def __init__(self, n_atom_types: int, latent: int = 100, hidden: int = 100,
                 n_bond_types: int = 3):
        super().__init__()
        self.hidden = hidden
        self.latent = latent
        self.n_bond_types = n_bond_types
        self.node_type_head = nn.Linear(latent, n_atom_types)
        self.node_init = nn.Linear(latent + n_atom_types, hidden)
        self.message_weights = nn.Parameter(torch.zeros(n_bond_types, hidden, hidden))
        nn.init.xavier_uniform_(self.message_weights)
        self.gru = nn.GRUCell(hidden, hidden)
        # pair features: focus state, candidate state, graph-mean state
        self.pair_mlp = nn.Linear(3 * hidden, hidden)
        self.edge_choice = nn.Linear(hidden, 1)            # per-candidate logit
        self.edge_label = nn.Linear(hidden, n_bond_types)  # per-order logits
        self.stop_scorer = nn.Linear(2 * hidden, 1)
        # connect-first prior: STOP starts unlikely so undertrained models
        # still expand every node; training calibrates the bias
        nn.init.constant_(self.stop_scorer.bias, -2.0)
        self.double()

    def init_states(self, z: torch.Tensor, types: list[int]) -> torch.Tensor:
        onehot = torch.zeros((len(types), self.node_type_head.out_features),
                             dtype=z.dtype)
        onehot[torch.arange(len(types)), types] = 1.0
        return torch.relu(self.node_init(torch.cat([z, onehot], dim=1)))

    def propagate(self, h: torch.Tensor, adjacency: torch.Tensor) -> torch.Tensor:
        """One gated update round over the partial graph (single molecule)."""
        m = gather_messages(h.unsqueeze(0), adjacency.unsqueeze(0),
                            self.message_weights).squeeze(0)
        return self.gru(m, h)

    def edge_logits(self, h: torch.Tensor, focus: int) -> tuple[torch.Tensor, torch.Tensor]:
        """(N x K candidate-order logits, scalar STOP logit) for one focus node."""
        n = h.shape[0]
        mean_state = h.mean(dim=0)
        pair_in = torch.cat([
            h[focus].expand(n, -1),
            h,
            mean_state.expand(n, -1),
        ], dim=1)
        pair_h = torch.relu(self.pair_mlp(pair_in))
        scores = self.edge_choice(pair_h) + self.edge_label(pair_h)   # N x K
        stop = self.stop_scorer(torch.cat([h[focus], mean_state])).squeeze(-1)
        return scores, stop


@dataclass
class DecoderState:
    """Mutable build state for one molecule being decoded."""

    types: list[int]
    registry: AtomRegistry
    hidden: torch.Tensor                      # N x H
    adjacency: torch.Tensor                   # N x N x K
    remaining: list[int]
    bonds: list[tuple[int, int, int]] = field(default_factory=list)
    bond_pairs: set = field(default_factory=set)
    queue: deque = field(default_factory=deque)
    connected: set = field(default_factory=set)

    @classmethod
    def fresh(cls, decoder: GraphDecoder, z: torch.Tensor, types: list[int],
              registry: AtomRegistry) -> "DecoderState":
        n = len(types)
        hidden = decoder.init_states(z, types)
        adjacency = torch.zeros((n, n, decoder.n_bond_types), dtype=z.dtype)
        remaining = [registry.spec(t).max_valence for t in types]
        state = cls(list(types), registry, hidden, adjacency, remaining)
        state.queue.append(0)
        state.connected.add(0)
        return state

    @property
    def num_nodes(self) -> int:
        return len(self.types)

    def add_bond(self, decoder: GraphDecoder, i: int, j: int, order: int):
        if i > j:
            i, j = j, i
        assert (i, j) not in self.bond_pairs
        self.bonds.append((i, j, order))
        self.bond_pairs.add((i, j))
        self.remaining[i] -= order
        self.remaining[j] -= order
        assert self.remaining[i] >= 0 and self.remaining[j] >= 0
        # copy-on-write: earlier propagate calls hold the old tensor in the
        # autograd graph, so never mutate it in place
        adjacency = self.adjacency.clone()
        adjacency[i, j, order - 1] = 1.0
        adjacency[j, i, order - 1] = 1.0
        self.adjacency = adjacency
        # "node update": refresh all states along the enlarged graph
        self.hidden = decoder.propagate(self.hidden, self.adjacency)

    def component_graph(self) -> MolecularGraph:
        """The finished molecule: the component containing node 0."""
        full = MolecularGraph(self.types, self.bonds, self.registry)
        keep = sorted(full.connected_component(0))
        return full.subgraph(keep)


def legal_edge_mask(state: DecoderState, focus: int) -> tuple[np.ndarray, bool]:
    """(N x K boolean candidate-order mask, STOP flag). STOP is always legal.

    (u, k) is admissible iff u is not the focus, the pair is not already
    bonded, and both remaining valences cover the order k.
    """
    n = state.num_nodes
    k_types = state.adjacency.shape[-1]
    mask = np.zeros((n, k_types), dtype=bool)
    rf = state.remaining[focus]
    for u in range(n):
        if u == focus or (min(u, focus), max(u, focus)) in state.bond_pairs:
            continue
        top = min(rf, state.remaining[u], k_types)
        mask[u, :top] = True
    return mask, True


def _masked_choice(logits: torch.Tensor, legal: torch.Tensor, temperature: float,
                   gen: torch.Generator | None) -> int:
    """Sample an index from a masked softmax; temperature 0 means argmax."""
    masked = torch.where(legal, logits, torch.tensor(NEG_INF, dtype=logits.dtype))
    if temperature == 0.0:
        return int(torch.argmax(masked).item())
    probs = torch.softmax(masked / temperature, dim=0)
    return int(torch.multinomial(probs, 1, generator=gen).item())


def decode_sample(z: torch.Tensor, decoder: GraphDecoder, registry: AtomRegistry,
                  temperature: float = 1.0, seed: int | None = None) -> MolecularGraph:
    """Sample one molecule from per-node latents z (N x L); always valid."""
    n = z.shape[0]
    if n < 1:
        raise ValueError("need at least one node latent")
    gen = torch.Generator().manual_seed(seed) if seed is not None else None
    with torch.no_grad():
        type_logits = decoder.node_type_head(z)
        types = []
        for i in range(n):
            all_legal = torch.ones(type_logits.shape[1], dtype=torch.bool)
            types.append(_masked_choice(type_logits[i], all_legal, temperature, gen))
        state = DecoderState.fresh(decoder, z, types, registry)
        while state.queue:
            focus = state.queue[0]
            mask, _ = legal_edge_mask(state, focus)
            scores, stop = decoder.edge_logits(state.hidden, focus)
            flat_logits = torch.cat([scores.reshape(-1), stop.reshape(1)])
            flat_legal = torch.cat([torch.from_numpy(mask.reshape(-1)),
                                    torch.tensor([True])])
            choice = _masked_choice(flat_logits, flat_legal, temperature, gen)
            if choice == flat_logits.shape[0] - 1:   # STOP
                state.queue.popleft()
                continue
            u, k = divmod(choice, decoder.n_bond_types)
            state.add_bond(decoder, focus, u, k + 1)
            if u not in state.connected:
                state.connected.add(u)
                state.queue.append(u)
    return state.component_graph()


def teacher_decisions(g: MolecularGraph):
    """Canonical decision sequence reconstructing g: breadth-first from node 0,
    a focus node's pending edges ordered by partner index, then STOP."""
    queue = deque([0])
    connected = {0}
    emitted = set()
    decisions = []
    adj = g.adjacency()
    while queue:
        focus = queue[0]
        for u, order in adj[focus]:   # adjacency lists are sorted by partner
            pair = (min(focus, u), max(focus, u))
            if pair in emitted:
                continue
            emitted.add(pair)
            decisions.append(("edge", focus, u, order))
            if u not in connected:
                connected.add(u)
                queue.append(u)
        decisions.append(("stop", focus))
        queue.popleft()
    return decisions


def reconstruction_nll(g: MolecularGraph, z: torch.Tensor,
                       decoder: GraphDecoder) -> torch.Tensor:
    """Teacher-forced negative log-likelihood of g under the masked decoder.

    Sum of node-type cross-entropies and every edge/STOP decision
    cross-entropy, with exactly the masks the sampler would apply.
    Differentiable in decoder parameters and in z.
    """
    n = g.num_atoms
    if z.shape[0] != n:
        raise ValueError(f"latents rows {z.shape[0]} != graph nodes {n}")
    type_logits = decoder.node_type_head(z)
    target_types = torch.tensor(g.atoms, dtype=torch.long)
    nll = nn.functional.cross_entropy(type_logits, target_types, reduction="sum")

    state = DecoderState.fresh(decoder, z, list(g.atoms), g.registry)
    for decision in teacher_decisions(g):
        focus = decision[1]
        mask, _ = legal_edge_mask(state, focus)
        scores, stop = decoder.edge_logits(state.hidden, focus)
        flat_logits = torch.cat([scores.reshape(-1), stop.reshape(1)])
        flat_legal = torch.cat([torch.from_numpy(mask.reshape(-1)),
                                torch.tensor([True])])
        masked = torch.where(flat_legal, flat_logits,
                             torch.tensor(NEG_INF, dtype=flat_logits.dtype))
        log_probs = torch.log_softmax(masked, dim=0)
        if decision[0] == "edge":
            _, _, u, order = decision
            index = u * decoder.n_bond_types + (order - 1)
            assert mask[u, order - 1], "gold edge must be legal"
            nll = nll - log_probs[index]
            state.add_bond(decoder, focus, u, order)
        else:
            nll = nll - log_probs[-1]
    return nll
