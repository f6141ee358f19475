"""Training objective assembly: reconstruction, KL, decorrelation, property
likelihood, and the selectable monotonicity penalty."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .encoder import LatentCode
from .heads import GroupHeadBank, PropertyHeadBank


class NonFiniteLossError(RuntimeError):
    def __init__(self, term: str, value: float):
        super().__init__(f"loss term {term!r} is non-finite ({value})")
        self.term = term


@dataclass
class LossWeights:
    """alpha: decorrelation, beta: property likelihood, gamma: monotonicity,
    lam: KL. mono_mode selects the penalty flavor."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    lam: float = 1.0
    mono_mode: str = "gradient"   # gradient | direction | off

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma, self.lam) < 0:
            raise ValueError("loss weights must be nonnegative")
        if self.mono_mode not in ("gradient", "direction", "off"):
            raise ValueError(f"unknown mono_mode {self.mono_mode!r}")

    def to_json_obj(self):
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                "lambda": self.lam, "mono_mode": self.mono_mode}

    @classmethod
    def from_json_obj(cls, obj):
        return cls(obj.get("alpha", 1.0), obj.get("beta", 1.0),
                   obj.get("gamma", 1.0), obj.get("lambda", 1.0),
                   obj.get("mono_mode", "gradient"))


@dataclass
class LossBreakdown:
    recon: torch.Tensor
    kl: torch.Tensor
    dip: torch.Tensor
    prop_nll: torch.Tensor
    mono: torch.Tensor
    total: torch.Tensor

    def floats(self) -> dict[str, float]:
        return {name: float(getattr(self, name).detach())
                for name in ("recon", "kl", "dip", "prop_nll", "mono", "total")}


def kl_per_dim(mu, log_sigma):
    """KL(N(mu, sigma^2) || N(0, 1)) for one coordinate."""
    if torch.is_tensor(mu) or torch.is_tensor(log_sigma):
        sigma_sq = torch.exp(2.0 * torch.as_tensor(log_sigma, dtype=torch.float64))
        mu = torch.as_tensor(mu, dtype=torch.float64)
        return 0.5 * (mu ** 2 + sigma_sq - 1.0 - torch.log(sigma_sq))
    sigma_sq = np.exp(2.0 * log_sigma)
    return 0.5 * (mu ** 2 + sigma_sq - 1.0 - np.log(sigma_sq))


def masked_kl(code: LatentCode) -> torch.Tensor:
    """Summed KL over unmasked node-dims, averaged per graph."""
    per = kl_per_dim(code.mu, code.log_sigma)
    per = per * code.node_mask.to(per.dtype).unsqueeze(-1)
    return per.sum() / code.mu.shape[0]


def dip_penalty(mu_bar: torch.Tensor) -> torch.Tensor:
    """Push the covariance of graph-level posterior means toward identity.

    Off-diagonal entries squared plus squared deviation of the diagonal
    from one; covariance uses the unbiased (B-1) normalizer.
    """
    if mu_bar.shape[0] < 2:
        raise ValueError("need a batch of at least 2 graphs")
    centered = mu_bar - mu_bar.mean(dim=0, keepdim=True)
    cov = centered.T @ centered / (mu_bar.shape[0] - 1)
    diag = torch.diagonal(cov)
    off = cov - torch.diag_embed(diag)
    return (off ** 2).sum() + ((diag - 1.0) ** 2).sum()


def mono_gradient_penalty(bank: PropertyHeadBank, zj: torch.Tensor,
                          margin: float = 0.0) -> torch.Tensor:
    """Mean hinge on negative analytic slopes, summed over properties.

    zj: B x J targeted graph-latent coordinates. A positive margin (training
    aid) penalizes slopes below +margin so a stochastic optimizer settles
    strictly inside the monotone region; margin 0 is the exact formulation.
    """
    return torch.relu(margin - bank.derivative(zj)).mean(dim=0).sum()


def mono_gradient_penalty_grouped(bank: GroupHeadBank, zbar: torch.Tensor,
                                  margin: float = 0.0) -> torch.Tensor:
    """Group form: hinge every analytic partial dF_p/dz_i."""
    total = zbar.new_zeros(())
    for g, (dims, _) in enumerate(bank.spec.groups):
        partials = bank.group_partials(g, zbar[:, list(dims)])
        total = total + torch.relu(margin - partials).mean(dim=0).sum()
    return total


def derangement(n: int, rng: np.random.Generator) -> np.ndarray:
    """Fixed-point-free pairing: a random cyclic shift, so i != pairing[i]."""
    if n < 2:
        raise ValueError("need at least 2 items to pair")
    perm = rng.permutation(n)
    pairing = np.empty(n, dtype=int)
    pairing[perm] = np.roll(perm, -1)
    return pairing


def mono_direction_penalty(zj: torch.Tensor, y: torch.Tensor,
                           pairing: np.ndarray) -> torch.Tensor:
    """Hinge on sign-disagreeing (property delta, latent delta) pairs.

    zj, y: B x J; pairing maps each row to its partner row.
    """
    if zj.shape[0] < 2:
        raise ValueError("need a batch of at least 2 graphs")
    idx = torch.from_numpy(np.asarray(pairing, dtype=np.int64))
    dz = zj - zj[idx]
    dy = y - y[idx]
    return torch.relu(-(dy * dz)).mean(dim=0).sum()


def _direction_columns(spec) -> list[int]:
    """Latent column paired with each property for the direction penalty:
    the property's own dim in singleton mode, the group's first dim otherwise."""
    cols: dict[int, int] = {}
    for dims, props in spec.groups:
        for p in props:
            cols[p] = dims[0]
    return [cols[p] for p in sorted(cols)]


def total_loss(batch, code: LatentCode, recon: torch.Tensor, heads,
               weights: LossWeights,
               pair_rng: np.random.Generator | None = None,
               extra_mono_points: torch.Tensor | None = None,
               mono_margin: float = 0.0) -> LossBreakdown:
    """Assemble the weighted objective; every term is logged separately.

    heads is either a PropertyHeadBank (independent properties, targeted
    dims are zbar coordinates 0..J-1) or a GroupHeadBank. The property and
    monotonicity terms see the sampled graph-level latents; the
    decorrelation term sees posterior means. extra_mono_points optionally
    widens the support the gradient penalty sees.
    """
    from .encoder import summarize

    zbar = summarize(code)
    y = batch.properties
    grouped = isinstance(heads, GroupHeadBank)
    if grouped:
        zj = zbar
        prop_nll = heads.nll(y, zbar).mean(dim=0).sum()
    else:
        zj = zbar[:, :heads.n_properties]
        prop_nll = heads.nll(y, zj).mean(dim=0).sum()

    if weights.mono_mode == "off" or weights.gamma == 0.0:
        mono = recon.new_zeros(())
    elif weights.mono_mode == "gradient":
        penalty = mono_gradient_penalty_grouped if grouped else mono_gradient_penalty
        mono = penalty(heads, zj, mono_margin)
        if extra_mono_points is not None:
            # anchors get their own mean so the batch cannot dilute the
            # hinge over the rarely-sampled ends of the control range
            mono = mono + penalty(heads, extra_mono_points, mono_margin)
    else:
        rng = pair_rng or np.random.default_rng(0)
        pairing = derangement(zbar.shape[0], rng)
        if grouped:
            z_cols = zbar[:, _direction_columns(heads.spec)]
        else:
            z_cols = zj
        mono = mono_direction_penalty(z_cols, y, pairing)

    kl = masked_kl(code)
    # dip needs B >= 2; skip it entirely when unweighted (singleton batches)
    dip = dip_penalty(code.mu_bar()) if weights.alpha > 0 else recon.new_zeros(())
    total = recon + weights.lam * kl + weights.alpha * dip \
        + weights.beta * prop_nll + weights.gamma * mono
    breakdown = LossBreakdown(recon, kl, dip, prop_nll, mono, total)
    for name, value in breakdown.floats().items():
        if not np.isfinite(value):
            raise NonFiniteLossError(name, value)
    return breakdown
