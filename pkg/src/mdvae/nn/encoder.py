"""Gated graph network inference model: per-node Gaussian posteriors over latents."""
from __future__ import annotations

from dataclasses import dataclass, replace

import torch
import torch.nn as nn

from ..data import Batch

LOG_SIGMA_CLAMP = 10.0


@dataclass
class LatentCode:
    """Per-node posterior parameters and (after reparameterize) sampled codes.

    Masked node rows are exactly zero in every field.
    """

    mu: torch.Tensor              # B x N_max x L
    log_sigma: torch.Tensor       # B x N_max x L
    node_mask: torch.Tensor       # B x N_max bool
    sizes: torch.Tensor           # B long
    z: torch.Tensor | None = None

    @property
    def sigma(self) -> torch.Tensor:
        return torch.exp(self.log_sigma) * self.node_mask.unsqueeze(-1)

    def mu_bar(self) -> torch.Tensor:
        """Masked mean of posterior means, B x L."""
        return self.mu.sum(dim=1) / self.sizes.to(self.mu.dtype).unsqueeze(-1)


def gather_messages(h: torch.Tensor, adjacency: torch.Tensor,
                    weights: torch.Tensor) -> torch.Tensor:
    """Per-edge-type linear messages summed over neighbors.

    h: B x N x H, adjacency: B x N x N x K one-hot, weights: K x H x H.
    Message for node i is sum_k sum_{j: (i,j) type k} W_k h_j.
    """
    out = torch.zeros_like(h)
    for k in range(weights.shape[0]):
        out = out + torch.matmul(adjacency[..., k], h) @ weights[k].T
    return out


class GraphEncoder(nn.Module):
    """Input projection, gated message-passing rounds, Gaussian output heads."""

    def __init__(self, n_atom_types: int, hidden: int = 100, latent: int = 100,
                 rounds: int = 2, n_bond_types: int = 3):
        super().__init__()
        if rounds < 1:
            raise ValueError("rounds must be >= 1")
        self.hidden = hidden
        self.latent = latent
        self.rounds = rounds
        self.input_proj = nn.Linear(n_atom_types, hidden)
        self.message_weights = nn.Parameter(torch.zeros(n_bond_types, hidden, hidden))
        nn.init.xavier_uniform_(self.message_weights)
        self.gru = nn.GRUCell(hidden, hidden)
        self.mu_head = nn.Linear(hidden, latent)
        self.log_sigma_head = nn.Linear(hidden, latent)
        self.double()

    def encode(self, batch: Batch, rounds: int | None = None) -> LatentCode:
        rounds = self.rounds if rounds is None else rounds
        mask = batch.node_mask.to(torch.float64).unsqueeze(-1)   # B x N x 1
        h = torch.relu(self.input_proj(batch.node_features)) * mask
        b, n, _ = h.shape
        for _ in range(rounds):
            m = gather_messages(h, batch.adjacency, self.message_weights)
            h = self.gru(m.reshape(b * n, -1), h.reshape(b * n, -1)).reshape(b, n, -1)
            h = h * mask
        mu = self.mu_head(h) * mask
        log_sigma = torch.clamp(self.log_sigma_head(h),
                                -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP) * mask
        return LatentCode(mu, log_sigma, batch.node_mask, batch.sizes)

    forward = encode


def reparameterize(code: LatentCode, seed: int) -> LatentCode:
    """Fill z = mu + sigma * eps with seeded standard-normal noise."""
    gen = torch.Generator().manual_seed(seed)
    eps = torch.randn(code.mu.shape, generator=gen, dtype=code.mu.dtype)
    mask = code.node_mask.to(code.mu.dtype).unsqueeze(-1)
    z = (code.mu + torch.exp(code.log_sigma) * eps) * mask
    return replace(code, z=z)


def summarize(code: LatentCode) -> torch.Tensor:
    """Graph-level latent summary: masked mean over node codes, B x L."""
    if code.z is None:
        raise ValueError("reparameterize before summarize")
    return code.z.sum(dim=1) / code.sizes.to(code.z.dtype).unsqueeze(-1)
