import itertools
import math

import numpy as np
import pytest
import torch

from mdvae.chem import canonical_key
from mdvae.data import DatasetRecord, batch_from_records
from mdvae.nn import (
    GraphEncoder,
    GraphDecoder,
    GroupHeadBank,
    GroupSpec,
    LossWeights,
    NonFiniteLossError,
    PropertyHeadBank,
    derangement,
    dip_penalty,
    kl_per_dim,
    masked_kl,
    mono_direction_penalty,
    mono_gradient_penalty,
    mono_gradient_penalty_grouped,
    reconstruction_nll,
    reparameterize,
    summarize,
    total_loss,
)

from conftest import make_random_graphs


# --- kl_per_dim ---

def test_kl_prior_equals_posterior():
    assert kl_per_dim(0.0, 0.0) == 0.0


def test_kl_mean_shift():
    assert kl_per_dim(1.0, 0.0) == pytest.approx(0.5, abs=1e-15)


def test_kl_sigma_two_monte_carlo():
    # frozen from the analytic value; the MC oracle below re-derives it
    analytic = kl_per_dim(0.0, math.log(2.0))
    assert analytic == pytest.approx(0.80685, abs=1e-4)
    rng = np.random.default_rng(0)
    x = rng.normal(0.0, 2.0, size=1_000_000)
    log_q = -0.5 * (x / 2.0) ** 2 - math.log(2.0) - 0.5 * math.log(2 * math.pi)
    log_p = -0.5 * x ** 2 - 0.5 * math.log(2 * math.pi)
    assert analytic == pytest.approx(np.mean(log_q - log_p), abs=1e-2)


def test_kl_monte_carlo_sweep():
    rng = np.random.default_rng(1)
    for _ in range(20):
        mu = float(rng.normal()) * 1.5
        sigma = float(rng.uniform(0.3, 2.5))
        analytic = kl_per_dim(mu, math.log(sigma))
        x = rng.normal(mu, sigma, size=1_000_000)
        log_q = -0.5 * ((x - mu) / sigma) ** 2 - math.log(sigma) - 0.5 * math.log(2 * math.pi)
        log_p = -0.5 * x ** 2 - 0.5 * math.log(2 * math.pi)
        assert analytic == pytest.approx(np.mean(log_q - log_p), abs=1e-2)


def test_kl_zero_iff_standard_normal():
    rng = np.random.default_rng(2)
    for _ in range(200):
        mu, log_sigma = rng.normal(size=2)
        value = kl_per_dim(mu, log_sigma)
        assert value >= 0
        if abs(mu) > 1e-6 or abs(log_sigma) > 1e-6:
            assert value > 0


# --- dip_penalty ---

def batch_with_covariance(target_cov, b=64, seed=0):
    """Rows whose sample covariance (B-1 normalizer) is exactly target_cov."""
    rng = np.random.default_rng(seed)
    l = target_cov.shape[0]
    x = rng.normal(size=(b, l))
    x -= x.mean(axis=0)
    cov = x.T @ x / (b - 1)
    evals, evecs = np.linalg.eigh(cov)
    whiten = evecs @ np.diag(evals ** -0.5) @ evecs.T
    evals_t, evecs_t = np.linalg.eigh(target_cov)
    sqrt_t = evecs_t @ np.diag(np.sqrt(evals_t)) @ evecs_t.T
    return torch.from_numpy(x @ whiten @ sqrt_t)


def test_dip_zero_on_whitened_batch():
    mu_bar = batch_with_covariance(np.eye(4), b=32, seed=3)
    assert float(dip_penalty(mu_bar)) == pytest.approx(0.0, abs=1e-10)


def test_dip_constructed_half_covariance():
    target = np.array([[1.0, 0.5], [0.5, 1.0]])
    mu_bar = batch_with_covariance(target, b=16, seed=4)
    assert float(dip_penalty(mu_bar)) == pytest.approx(0.5, abs=1e-10)


def test_dip_matches_covariance_oracle():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(20, 6))
    cov = np.cov(x, rowvar=False, ddof=1)
    expected = (cov ** 2).sum() - (np.diag(cov) ** 2).sum() + ((np.diag(cov) - 1) ** 2).sum()
    assert float(dip_penalty(torch.from_numpy(x))) == pytest.approx(expected, rel=1e-12)


def test_dip_batch_order_invariant():
    rng = np.random.default_rng(6)
    x = torch.from_numpy(rng.normal(size=(10, 3)))
    perm = torch.from_numpy(rng.permutation(10))
    assert float(dip_penalty(x)) == pytest.approx(float(dip_penalty(x[perm])), rel=1e-12)


def test_dip_needs_two_rows():
    with pytest.raises(ValueError):
        dip_penalty(torch.zeros((1, 3), dtype=torch.float64))


# --- monotonic penalties ---

def bank_with_coeffs(rows):
    bank = PropertyHeadBank(len(rows), degree=len(rows[0]) - 1)
    with torch.no_grad():
        bank.coeffs.copy_(torch.tensor(rows, dtype=torch.float64))
    return bank


def test_mono_gradient_cubic_everywhere_zero():
    bank = bank_with_coeffs([[0.0, 0.0, 0.0, 1.0]])   # z^3, slope 3z^2 >= 0
    zj = torch.linspace(-5, 5, 41, dtype=torch.float64).unsqueeze(1)
    assert float(mono_gradient_penalty(bank, zj)) == 0.0


def test_mono_gradient_negative_slope():
    bank = bank_with_coeffs([[0.0, -2.0]])            # -2z, slope -2
    zj = torch.zeros((10, 1), dtype=torch.float64)
    assert float(mono_gradient_penalty(bank, zj)) == pytest.approx(2.0, abs=1e-15)


def test_mono_gradient_kink_case():
    bank = bank_with_coeffs([[0.0, -1.0, 1.0]])       # z^2 - z, slope 2z - 1
    zj = torch.zeros((1, 1), dtype=torch.float64)
    assert float(mono_gradient_penalty(bank, zj)) == pytest.approx(1.0, abs=1e-15)


def test_mono_gradient_grouped_matches_singleton():
    torch.manual_seed(0)
    bank = bank_with_coeffs([[0.0, -1.0, 0.3], [0.5, 2.0, -0.2]])
    spec = GroupSpec.singletons(2)
    gbank = GroupHeadBank(spec, degree=2)
    with torch.no_grad():
        for j in range(2):
            gbank.dim_coeffs[j].copy_(bank.coeffs[j].unsqueeze(0))
            gbank.mixing[j].fill_(1.0)
    zj = torch.randn((12, 2), dtype=torch.float64)
    a = float(mono_gradient_penalty(bank, zj))
    b = float(mono_gradient_penalty_grouped(gbank, zj))
    assert a == pytest.approx(b, rel=1e-12)


def test_mono_direction_comonotone_pair():
    zj = torch.tensor([[0.0], [1.0]], dtype=torch.float64)
    y = torch.tensor([[0.0], [2.0]], dtype=torch.float64)
    assert float(mono_direction_penalty(zj, y, np.array([1, 0]))) == 0.0


def test_mono_direction_antimonotone_pair():
    zj = torch.tensor([[0.0], [1.0]], dtype=torch.float64)
    y = torch.tensor([[1.0], [0.0]], dtype=torch.float64)
    assert float(mono_direction_penalty(zj, y, np.array([1, 0]))) == pytest.approx(1.0)


def test_mono_direction_sorted_batch_all_pairings():
    # co-monotone batch: zero under every possible pairing
    zj = torch.tensor([[0.0], [0.5], [1.2], [3.0]], dtype=torch.float64)
    y = 2.0 * zj + 1.0
    for perm in itertools.permutations(range(4)):
        assert float(mono_direction_penalty(zj, y, np.array(perm))) == 0.0


def test_mono_direction_needs_pairs():
    with pytest.raises(ValueError):
        mono_direction_penalty(torch.zeros((1, 1), dtype=torch.float64),
                               torch.zeros((1, 1), dtype=torch.float64), np.array([0]))


def test_derangement_has_no_fixed_points():
    rng = np.random.default_rng(7)
    for n in (2, 3, 5, 16, 64):
        for _ in range(20):
            pairing = derangement(n, rng)
            assert np.all(pairing != np.arange(n))
            assert sorted(pairing) == list(range(n))


# --- total_loss assembly ---

def tiny_stack(qm9_registry, b=4, latent=6, hidden=8, n_props=2, seed=0,
               mono_mode="gradient"):
    torch.manual_seed(seed)
    enc = GraphEncoder(len(qm9_registry), hidden=hidden, latent=latent)
    dec = GraphDecoder(len(qm9_registry), latent=latent, hidden=hidden)
    bank = PropertyHeadBank(n_props, degree=3)
    graphs = make_random_graphs(qm9_registry, b, max_atoms=6, seed=seed + 1)
    rng = np.random.default_rng(seed)
    recs = [DatasetRecord(g, rng.normal(size=n_props), np.zeros(n_props), canonical_key(g))
            for g in graphs]
    batch = batch_from_records(recs, 6, qm9_registry)
    return enc, dec, bank, batch


def compute_loss(enc, dec, bank, batch, weights, seed=11):
    code = reparameterize(enc.encode(batch), seed=seed)
    zbar = summarize(code)
    recon = sum(reconstruction_nll(g, code.z[i, :g.num_atoms], dec)
                for i, g in enumerate(batch.graphs)) / len(batch.graphs)
    return total_loss(batch, code, recon, bank, weights,
                      pair_rng=np.random.default_rng(0)), code, zbar, recon


def test_all_weights_zero_total_is_recon(qm9_registry):
    enc, dec, bank, batch = tiny_stack(qm9_registry)
    weights = LossWeights(alpha=0, beta=0, gamma=0, lam=0, mono_mode="gradient")
    breakdown, _, _, recon = compute_loss(enc, dec, bank, batch, weights)
    assert float(breakdown.total) == pytest.approx(float(recon), rel=1e-15)


def test_gamma_zero_equals_mono_off(qm9_registry):
    enc, dec, bank, batch = tiny_stack(qm9_registry)
    w1 = LossWeights(gamma=0.0, mono_mode="gradient")
    w2 = LossWeights(gamma=1.0, mono_mode="off")
    b1, _, _, _ = compute_loss(enc, dec, bank, batch, w1)
    b2, _, _, _ = compute_loss(enc, dec, bank, batch, w2)
    assert float(b1.total) == pytest.approx(float(b2.total), rel=1e-15)


def test_total_matches_hand_assembly(qm9_registry):
    enc, dec, bank, batch = tiny_stack(qm9_registry, seed=2)
    weights = LossWeights(alpha=0.7, beta=1.3, gamma=0.9, lam=1.1, mono_mode="gradient")
    breakdown, code, zbar, recon = compute_loss(enc, dec, bank, batch, weights)
    zj = zbar[:, :2]
    expected = (float(recon)
                + 1.1 * float(masked_kl(code))
                + 0.7 * float(dip_penalty(code.mu_bar()))
                + 1.3 * float(bank.nll(batch.properties, zj).mean(dim=0).sum())
                + 0.9 * float(mono_gradient_penalty(bank, zj)))
    assert float(breakdown.total) == pytest.approx(expected, rel=1e-12)
    assert float(breakdown.total) == pytest.approx(
        float(breakdown.recon) + 1.1 * float(breakdown.kl) + 0.7 * float(breakdown.dip)
        + 1.3 * float(breakdown.prop_nll) + 0.9 * float(breakdown.mono), rel=1e-15)


def test_direction_mode_runs(qm9_registry):
    enc, dec, bank, batch = tiny_stack(qm9_registry, seed=3)
    weights = LossWeights(mono_mode="direction")
    breakdown, _, _, _ = compute_loss(enc, dec, bank, batch, weights)
    assert float(breakdown.mono) >= 0


def test_group_mode_runs(qm9_registry):
    torch.manual_seed(4)
    enc, dec, _, batch = tiny_stack(qm9_registry, seed=4)
    gbank = GroupHeadBank(GroupSpec((((0, 1), (0, 1)),)), degree=3)
    weights = LossWeights(mono_mode="gradient")
    breakdown, _, _, _ = compute_loss(enc, dec, gbank, batch, weights)
    assert np.isfinite(float(breakdown.total))


def test_nonfinite_term_identified(qm9_registry):
    enc, dec, bank, batch = tiny_stack(qm9_registry, seed=5)
    with torch.no_grad():
        bank.coeffs[0, 0] = float("inf")
    with pytest.raises(NonFiniteLossError) as err:
        compute_loss(enc, dec, bank, batch, LossWeights())
    assert err.value.term == "prop_nll"


def test_invalid_weights():
    with pytest.raises(ValueError):
        LossWeights(alpha=-1.0)
    with pytest.raises(ValueError):
        LossWeights(mono_mode="sideways")


def test_weights_json_roundtrip():
    w = LossWeights(0.5, 1.5, 2.0, 0.25, "direction")
    assert LossWeights.from_json_obj(w.to_json_obj()) == w


# --- gradient fidelity (rehearsal of the acceptance criterion) ---

def test_total_loss_gradients_match_finite_differences(qm9_registry):
    enc, dec, bank, batch = tiny_stack(qm9_registry, b=3, latent=5, hidden=6, seed=6)
    weights = LossWeights(alpha=0.8, beta=1.2, gamma=1.5, lam=0.9, mono_mode="gradient")

    def loss_value():
        breakdown, _, _, _ = compute_loss(enc, dec, bank, batch, weights, seed=21)
        return breakdown.total

    loss = loss_value()
    assert float(loss.detach()) > 0
    params = {f"enc.{n}": p for n, p in enc.named_parameters()}
    params |= {f"dec.{n}": p for n, p in dec.named_parameters()}
    params |= {f"heads.{n}": p for n, p in bank.named_parameters()}
    grads = torch.autograd.grad(loss, list(params.values()), allow_unused=True)

    rng = np.random.default_rng(8)
    for (name, p), grad in zip(params.items(), grads):
        if grad is None:
            grad = torch.zeros_like(p)
        flat = p.data.reshape(-1)
        n_coords = min(4, flat.shape[0])
        coords = rng.choice(flat.shape[0], size=n_coords, replace=False)
        for c in coords:
            c = int(c)
            orig = float(flat[c])
            h = 1e-5 * max(1.0, abs(orig))
            flat[c] = orig + h
            up = float(loss_value().detach())
            flat[c] = orig - h
            down = float(loss_value().detach())
            flat[c] = orig
            fd = (up - down) / (2 * h)
            an = float(grad.reshape(-1)[c])
            assert abs(an - fd) <= 1e-4 * max(abs(fd), abs(an), 1e-6), \
                f"{name}[{c}]: analytic {an} vs fd {fd}"
