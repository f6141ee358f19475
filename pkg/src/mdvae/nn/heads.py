"""Polynomial latent-to-property maps with analytic derivatives.

Each targeted property j gets F_j(z) = sum_k a_{j,k} z^k over one latent
coordinate (degree 1 recovers the linear baseline). The group-based variant
ties a set of latent dimensions to a set of correlated properties through
per-dimension polynomials mixed by a matrix; its partial derivatives stay
analytic, which is what the gradient-based monotonicity penalty consumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn

LOG_2PI = math.log(2.0 * math.pi)


def _horner(coeffs, z):
    """Evaluate ascending-order coefficients at z; torch or numpy alike.

    coeffs has shape (..., d+1) indexed by power, z broadcasts against
    coeffs[..., 0].
    """
    if torch.is_tensor(z) and not torch.is_tensor(coeffs):
        coeffs = torch.from_numpy(np.asarray(coeffs, dtype=np.float64))
    result = coeffs[..., -1] * torch.ones_like(z) if torch.is_tensor(z) else coeffs[..., -1]
    for k in range(coeffs.shape[-1] - 2, -1, -1):
        result = result * z + coeffs[..., k]
    return result


def _horner_derivative(coeffs, z):
    if torch.is_tensor(z) and not torch.is_tensor(coeffs):
        coeffs = torch.from_numpy(np.asarray(coeffs, dtype=np.float64))
    d = coeffs.shape[-1] - 1
    if d == 0:
        return z * 0.0
    result = coeffs[..., d] * d
    if torch.is_tensor(z):
        result = result * torch.ones_like(z)
    for k in range(d - 1, 0, -1):
        result = result * z + coeffs[..., k] * k
    return result


@dataclass
class PolynomialHead:
    """Frozen per-property head: coefficient vector (ascending) plus noise scale."""

    coefficients: np.ndarray
    noise_sigma: float = 1.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if self.coefficients.ndim != 1 or self.coefficients.shape[0] < 2:
            raise ValueError("need at least degree 1 (two coefficients)")
        if self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be positive")

    @property
    def degree(self) -> int:
        return self.coefficients.shape[0] - 1


def predict(head: PolynomialHead, z):
    """Polynomial value at z (Horner)."""
    return _horner(head.coefficients, z)


def derivative(head: PolynomialHead, z):
    """Exact analytic derivative at z; no numerical differencing anywhere."""
    return _horner_derivative(head.coefficients, z)


def nll(head: PolynomialHead, y, z):
    """Gaussian observation negative log-likelihood of y given F(z)."""
    resid = (y - predict(head, z)) / head.noise_sigma
    return 0.5 * resid ** 2 + math.log(head.noise_sigma) + 0.5 * LOG_2PI


class PropertyHeadBank(nn.Module):
    """Trainable stack of J independent polynomial heads (one latent dim each)."""

    def __init__(self, n_properties: int, degree: int = 3):
        super().__init__()
        if degree < 1:
            raise ValueError("degree must be >= 1")
        self.degree = degree
        # slope starts mildly positive (the monotone direction is positive by
        # convention); the higher-order terms start noisy and unconstrained
        coeffs = 0.15 * torch.randn((n_properties, degree + 1), dtype=torch.float64)
        coeffs[:, :2] *= 1.0 / 3.0
        coeffs[:, 1] += 0.3
        self.coeffs = nn.Parameter(coeffs)
        self.raw_sigma = nn.Parameter(torch.zeros(n_properties, dtype=torch.float64))

    @property
    def n_properties(self) -> int:
        return self.coeffs.shape[0]

    def noise_sigma(self) -> torch.Tensor:
        return nn.functional.softplus(self.raw_sigma) + 1e-4

    def predict(self, zj: torch.Tensor) -> torch.Tensor:
        """zj: B x J targeted coordinates -> B x J predictions."""
        return _horner(self.coeffs, zj)

    def derivative(self, zj: torch.Tensor) -> torch.Tensor:
        return _horner_derivative(self.coeffs, zj)

    def nll(self, y: torch.Tensor, zj: torch.Tensor) -> torch.Tensor:
        sigma = self.noise_sigma()
        resid = (y - self.predict(zj)) / sigma
        return 0.5 * resid ** 2 + torch.log(sigma) + 0.5 * LOG_2PI

    def export(self) -> list[PolynomialHead]:
        sigma = self.noise_sigma().detach().numpy()
        return [PolynomialHead(self.coeffs[j].detach().numpy().copy(), float(sigma[j]))
                for j in range(self.n_properties)]


@dataclass(frozen=True)
class GroupSpec:
    """Pairing of latent-dimension sets with property-index sets.

    groups[g] = (latent_dims, property_indices); latent dims are pairwise
    disjoint across groups and every targeted property appears exactly once.
    """

    groups: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    def __post_init__(self):
        seen_dims: set[int] = set()
        seen_props: set[int] = set()
        for dims, props in self.groups:
            if not dims or not props:
                raise ValueError("empty group")
            if seen_dims & set(dims):
                raise ValueError("latent dims shared across groups")
            if seen_props & set(props):
                raise ValueError("property targeted by two groups")
            seen_dims |= set(dims)
            seen_props |= set(props)

    @property
    def n_properties(self) -> int:
        return sum(len(props) for _, props in self.groups)

    @classmethod
    def singletons(cls, n_properties: int) -> "GroupSpec":
        return cls(tuple(((j,), (j,)) for j in range(n_properties)))

    def to_json_obj(self):
        return [[list(dims), list(props)] for dims, props in self.groups]

    @classmethod
    def from_json_obj(cls, obj) -> "GroupSpec":
        return cls(tuple((tuple(d), tuple(p)) for d, p in obj))


class GroupHeadBank(nn.Module):
    """Group heads: per-dimension polynomials summed through a mixing matrix."""

    def __init__(self, spec: GroupSpec, degree: int = 3):
        super().__init__()
        if degree < 1:
            raise ValueError("degree must be >= 1")
        self.spec = spec
        self.degree = degree
        self.dim_coeffs = nn.ParameterList()
        self.mixing = nn.ParameterList()
        self.raw_sigma = nn.ParameterList()
        for dims, props in spec.groups:
            coeffs = 0.15 * torch.randn((len(dims), degree + 1), dtype=torch.float64)
            coeffs[:, :2] *= 1.0 / 3.0
            coeffs[:, 1] += 0.3
            self.dim_coeffs.append(nn.Parameter(coeffs))
            mix = torch.zeros((len(props), len(dims)), dtype=torch.float64)
            mix[:min(len(props), len(dims)), :].fill_diagonal_(1.0)
            mix = mix + 0.01 * torch.randn(mix.shape, dtype=torch.float64)
            self.mixing.append(nn.Parameter(mix))
            self.raw_sigma.append(nn.Parameter(torch.zeros(len(props), dtype=torch.float64)))

    def group_values(self, g: int, z_dims: torch.Tensor) -> torch.Tensor:
        """Per-dimension polynomial values q_i(z_i): B x |dims|."""
        return _horner(self.dim_coeffs[g], z_dims)

    def group_predict(self, g: int, z_dims: torch.Tensor) -> torch.Tensor:
        """z_dims: B x |dims| -> B x |props| through the mixing matrix."""
        dims, _ = self.spec.groups[g]
        if z_dims.shape[-1] != len(dims):
            raise ValueError(f"group {g} expects {len(dims)} dims, got {z_dims.shape[-1]}")
        if len(dims) == 1 and self.mixing[g].shape == (1, 1):
            # singleton groups reduce to the independent-property path bit-for-bit
            return self.group_values(g, z_dims) * self.mixing[g][0, 0]
        return self.group_values(g, z_dims) @ self.mixing[g].T

    def group_partials(self, g: int, z_dims: torch.Tensor) -> torch.Tensor:
        """Analytic dF_p/dz_i: B x |props| x |dims|."""
        dq = _horner_derivative(self.dim_coeffs[g], z_dims)      # B x |dims|
        return self.mixing[g].unsqueeze(0) * dq.unsqueeze(1)

    def predict_all(self, zbar: torch.Tensor) -> torch.Tensor:
        """Full property vector (ordered by property index) from graph latents."""
        out = torch.zeros((zbar.shape[0], self.spec.n_properties), dtype=zbar.dtype)
        for g, (dims, props) in enumerate(self.spec.groups):
            values = self.group_predict(g, zbar[:, list(dims)])
            for col, p in enumerate(props):
                out[:, p] = values[:, col]
        return out

    def nll(self, y: torch.Tensor, zbar: torch.Tensor) -> torch.Tensor:
        out = torch.zeros_like(y)
        for g, (dims, props) in enumerate(self.spec.groups):
            pred = self.group_predict(g, zbar[:, list(dims)])
            sigma = nn.functional.softplus(self.raw_sigma[g]) + 1e-4
            resid = (y[:, list(props)] - pred) / sigma
            vals = 0.5 * resid ** 2 + torch.log(sigma) + 0.5 * LOG_2PI
            for col, p in enumerate(props):
                out[:, p] = vals[:, col]
        return out


def group_predict(bank: GroupHeadBank, g: int, z_dims: torch.Tensor) -> torch.Tensor:
    return bank.group_predict(g, z_dims)
