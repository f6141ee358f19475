"""Training loop, configuration, and bit-exact checkpoint containers."""
from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import torch

from .chem import AtomRegistry
from .data import Dataset, DatasetRecord, make_batches
from .nn.decoder import GraphDecoder, reconstruction_nll
from .nn.encoder import GraphEncoder, reparameterize
from .nn.heads import GroupHeadBank, GroupSpec, PropertyHeadBank
from .nn.objectives import LossWeights, total_loss

CHECKPOINT_MAGIC = b"MDCK0001"
LOG_FIELDS = ("step", "recon", "kl", "dip", "prop_nll", "mono", "total")


@dataclass
class TrainConfig:
    """Everything a run needs; JSON keys match the field names below
    (weights nest under "weights" with "lambda" for the KL weight)."""

    learning_rate: float = 5e-4
    batch_size: int = 64
    epochs: int = 10
    seed: int = 0
    latent_dim: int = 100
    hidden_dim: int = 100
    message_rounds: int = 2
    poly_degree: int = 3
    targeted_properties: tuple[str, ...] = ()
    group_spec: GroupSpec | None = None
    n_max: int | None = None
    weights: LossWeights = field(default_factory=LossWeights)
    kl_warmup: bool = True
    # Ramp the property-likelihood weight 0 -> beta over the first 10% of
    # steps so the monotonicity hinge shapes head slopes before the property
    # fit can lock a latent into an anti-monotone orientation.
    beta_warmup: bool = False
    # Optional step-decayed learning rate for the last 40% of training.
    lr_final: float | None = None
    grad_clip: float = 10.0
    # The gradient penalty also sees this many uniform draws from
    # [-mono_anchor_range, mono_anchor_range] per step, so the monotone
    # constraint covers the whole slider range rather than just the
    # posterior's support. Set count to 0 for posterior-samples-only.
    mono_anchor_range: float = 5.0
    mono_anchor_count: int = 8
    # Positive training margin for the gradient hinge (slopes below +margin
    # are penalized); keeps the optimizer strictly inside the monotone set.
    mono_margin: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("positive learning rate, batch size, epochs required")
        if len(self.targeted_properties) > self.latent_dim:
            raise ValueError("more targeted properties than latent dimensions")

    def to_json_obj(self) -> dict:
        obj = {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "latent_dim": self.latent_dim,
            "hidden_dim": self.hidden_dim,
            "message_rounds": self.message_rounds,
            "poly_degree": self.poly_degree,
            "targeted_properties": list(self.targeted_properties),
            "group_spec": self.group_spec.to_json_obj() if self.group_spec else None,
            "n_max": self.n_max,
            "weights": self.weights.to_json_obj(),
            "kl_warmup": self.kl_warmup,
            "beta_warmup": self.beta_warmup,
            "lr_final": self.lr_final,
            "grad_clip": self.grad_clip,
            "mono_anchor_range": self.mono_anchor_range,
            "mono_anchor_count": self.mono_anchor_count,
            "mono_margin": self.mono_margin,
        }
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TrainConfig":
        obj = dict(obj)
        weights = LossWeights.from_json_obj(obj.pop("weights", {}))
        group = obj.pop("group_spec", None)
        targeted = tuple(obj.pop("targeted_properties", ()))
        known = {f for f in cls.__dataclass_fields__ if f not in
                 ("weights", "group_spec", "targeted_properties")}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(weights=weights, targeted_properties=targeted,
                   group_spec=GroupSpec.from_json_obj(group) if group else None,
                   **obj)

    @classmethod
    def from_json_file(cls, path) -> "TrainConfig":
        with open(path) as fh:
            return cls.from_json_obj(json.load(fh))


@dataclass
class Checkpoint:
    encoder: GraphEncoder
    decoder: GraphDecoder
    heads: PropertyHeadBank | GroupHeadBank
    specs: list
    registry: AtomRegistry
    config: TrainConfig
    step: int
    size_histogram: dict[int, int]

    @property
    def n_targeted(self) -> int:
        return len(self.config.targeted_properties)


def build_models(config: TrainConfig, registry: AtomRegistry):
    """Construct encoder/decoder/heads deterministically under config.seed."""
    torch.manual_seed(config.seed)
    encoder = GraphEncoder(len(registry), hidden=config.hidden_dim,
                           latent=config.latent_dim, rounds=config.message_rounds)
    decoder = GraphDecoder(len(registry), latent=config.latent_dim,
                           hidden=config.hidden_dim)
    if config.group_spec is not None:
        heads = GroupHeadBank(config.group_spec, degree=config.poly_degree)
    else:
        heads = PropertyHeadBank(len(config.targeted_properties),
                                 degree=config.poly_degree)
    return encoder, decoder, heads


def _relabeled(records: Sequence[DatasetRecord], rng: np.random.Generator):
    """Per-epoch node-relabeling augmentation (also randomizes the BFS root)."""
    out = []
    for rec in records:
        perm = rng.permutation(rec.graph.num_atoms).tolist()
        out.append(DatasetRecord(rec.graph.permute(perm), rec.properties,
                                 rec.raw_properties, rec.key))
    return out


def _batch_recon(batch, code, decoder) -> torch.Tensor:
    total = None
    for i, g in enumerate(batch.graphs):
        nll = reconstruction_nll(g, code.z[i, :g.num_atoms], decoder)
        total = nll if total is None else total + nll
    return total / len(batch.graphs)


def train(dataset: Dataset, config: TrainConfig, out_path=None, verbose=False):
    """Minimize the full objective with Adam; returns (Checkpoint, log rows).

    Deterministic under a fixed seed and single-threaded execution; a
    checkpoint is written to out_path after every epoch (atomically).
    """
    names = tuple(dataset.property_names)
    if config.targeted_properties and tuple(config.targeted_properties) != names:
        raise ValueError(f"config targets {config.targeted_properties} but the "
                         f"dataset provides {names}")
    config = replace(config, targeted_properties=names)
    if config.group_spec is not None and config.group_spec.n_properties != len(names):
        raise ValueError("group spec does not cover the dataset properties")

    records = dataset.train_records()
    if not records:
        raise ValueError("empty training split")
    n_max = config.n_max or max(r.graph.num_atoms for r in records)
    config = replace(config, n_max=n_max)

    encoder, decoder, heads = build_models(config, dataset.registry)
    # classifier-bias warm start: the node-type head's marginal over prior
    # latents should match the element frequencies from step 0
    counts = np.ones(len(dataset.registry))
    for rec in records:
        for t in rec.graph.atoms:
            counts[t] += 1
    with torch.no_grad():
        decoder.node_type_head.bias.copy_(
            torch.from_numpy(np.log(counts / counts.sum())))
    params = (list(encoder.parameters()) + list(decoder.parameters())
              + list(heads.parameters()))
    opt = torch.optim.Adam(params, lr=config.learning_rate)

    steps_per_epoch = (len(records) + config.batch_size - 1) // config.batch_size
    total_steps = steps_per_epoch * config.epochs
    warmup_steps = max(1, round(0.1 * total_steps))

    ck = Checkpoint(encoder, decoder, heads, dataset.specs, dataset.registry,
                    config, 0, dataset.size_histogram())
    log_rows = []
    step = 0
    for epoch in range(config.epochs):
        epoch_rng = np.random.default_rng([config.seed, epoch, 7])
        epoch_records = _relabeled(records, epoch_rng)
        batches = make_batches(epoch_records, config.batch_size, n_max,
                               dataset.registry, seed=int(epoch_rng.integers(2**31)))
        for batch in batches:
            if batch.batch_size < 2:
                continue   # dip and pairing terms need at least 2 graphs
            if config.lr_final is not None and step == int(0.6 * total_steps):
                for group in opt.param_groups:
                    group["lr"] = config.lr_final
            code = reparameterize(encoder.encode(batch),
                                  seed=config.seed * 1_000_003 + step)
            recon = _batch_recon(batch, code, decoder)
            lam = config.weights.lam
            if config.kl_warmup:
                lam = lam * min(1.0, step / warmup_steps)
            beta = config.weights.beta
            if config.beta_warmup:
                beta = beta * min(1.0, step / warmup_steps)
            weights = replace(config.weights, lam=lam, beta=beta)
            extra = None
            if (weights.mono_mode == "gradient" and config.mono_anchor_count > 0
                    and weights.gamma > 0):
                width = len(names) if config.group_spec is None else config.latent_dim
                gen = torch.Generator().manual_seed(config.seed * 11 + step)
                extra = (torch.rand((config.mono_anchor_count, width),
                                    generator=gen, dtype=torch.float64) * 2 - 1)
                extra = extra * config.mono_anchor_range
            breakdown = total_loss(batch, code, recon, heads, weights,
                                   pair_rng=np.random.default_rng([config.seed, step]),
                                   extra_mono_points=extra,
                                   mono_margin=config.mono_margin)
            opt.zero_grad()
            breakdown.total.backward()
            torch.nn.utils.clip_grad_norm_(params, config.grad_clip)
            opt.step()
            step += 1
            row = {"step": step, **breakdown.floats()}
            log_rows.append(row)
            if verbose and (step % 10 == 0 or step == 1):
                print("  " + " ".join(f"{k}={row[k]:.4f}" if k != "step"
                                      else f"step={row[k]}" for k in LOG_FIELDS))
        ck.step = step
        if out_path is not None:
            save_checkpoint(ck, out_path)
    return ck, log_rows


def write_log_csv(log_rows, path):
    with open(path, "w") as fh:
        fh.write(",".join(LOG_FIELDS) + "\n")
        for row in log_rows:
            fh.write(",".join(repr(row[k]) if k != "step" else str(row[k])
                              for k in LOG_FIELDS) + "\n")


# --- checkpoint container: magic, JSON header, raw float64 tensor payload ---

def _ordered_tensors(ck: Checkpoint):
    groups = [("encoder", ck.encoder), ("decoder", ck.decoder), ("heads", ck.heads)]
    for prefix, module in groups:
        for name, tensor in sorted(module.state_dict().items()):
            yield f"{prefix}.{name}", tensor


def save_checkpoint(ck: Checkpoint, path):
    manifest = []
    payload = bytearray()
    for name, tensor in _ordered_tensors(ck):
        array = tensor.detach().numpy().astype("<f8", copy=False)
        manifest.append([name, list(array.shape)])
        payload.extend(array.tobytes())
    header = {
        "config": ck.config.to_json_obj(),
        "registry": ck.registry.to_json_obj(),
        "specs": [[s.name, s.source, s.mean, s.std] for s in ck.specs],
        "step": ck.step,
        "size_histogram": sorted(ck.size_histogram.items()),
        "manifest": manifest,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack(">I", len(blob)))
        fh.write(blob)
        fh.write(bytes(payload))
    os.replace(tmp, path)


class CheckpointError(RuntimeError):
    pass


def load_checkpoint(path, registry: AtomRegistry | None = None) -> Checkpoint:
    from .data import PropertySpec

    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: bad magic {magic!r} "
                                  f"(expected {CHECKPOINT_MAGIC!r})")
        (hlen,) = struct.unpack(">I", fh.read(4))
        header = json.loads(fh.read(hlen))
        config = TrainConfig.from_json_obj(header["config"])
        file_registry = AtomRegistry.from_json_obj(header["registry"])
        if registry is not None and registry != file_registry:
            raise CheckpointError(f"{path}: checkpoint registry "
                                  f"{file_registry.symbols} does not match "
                                  f"expected {registry.symbols}")
        encoder, decoder, heads = build_models(config, file_registry)
        ck = Checkpoint(
            encoder, decoder, heads,
            [PropertySpec(n, s, m, sd) for n, s, m, sd in header["specs"]],
            file_registry, config, header["step"],
            {int(k): int(v) for k, v in header["size_histogram"]},
        )
        tensors = dict(_ordered_tensors(ck))
        if set(tensors) != {name for name, _ in header["manifest"]}:
            raise CheckpointError(f"{path}: manifest does not cover the model "
                                  "parameters (version mismatch?)")
        for name, shape in header["manifest"]:
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise CheckpointError(f"{path}: truncated payload at {name}")
            array = np.frombuffer(raw, dtype="<f8").reshape(shape)
            with torch.no_grad():
                tensors[name].copy_(torch.from_numpy(array.copy()))
    return ck
