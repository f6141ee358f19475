"""Sampling and the evaluation suite: corpus metrics, distribution
divergences, mutual information, disentanglement scores, latent traversal."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import torch

from .chem import MolecularGraph, canonical_key, emit_smiles, graph_statistics, is_valid
from .data import BUILTIN_PROPERTIES, compute_property
from .nn.decoder import decode_sample
from .nn.heads import PolynomialHead, predict as head_predict
from .training import Checkpoint


@dataclass
class GeneratedMolecule:
    graph: MolecularGraph
    key: bytes
    properties: np.ndarray          # normalized units, aligned with ck.specs
    property_sources: tuple[str, ...]   # "computed" or "predicted" per entry
    zbar: np.ndarray
    n_drawn: int = 0                # node count drawn before decoding


@dataclass
class GeneratedSet:
    molecules: list[GeneratedMolecule]
    property_names: tuple[str, ...]

    def __len__(self):
        return len(self.molecules)

    def keys(self) -> list[bytes]:
        return [m.key for m in self.molecules]

    def property_matrix(self) -> np.ndarray:
        return np.stack([m.properties for m in self.molecules])

    def zbar_matrix(self) -> np.ndarray:
        return np.stack([m.zbar for m in self.molecules])

    def write_csv(self, path, specs=None):
        """smiles, canonical key hex, then one raw-unit column per property."""
        with open(path, "w") as fh:
            cols = ",".join(self.property_names)
            fh.write(f"smiles,canonical_key,{cols}\n" if cols else "smiles,canonical_key\n")
            for m in self.molecules:
                values = m.properties
                if specs is not None:
                    values = [s.denormalize(v) for s, v in zip(specs, values)]
                tail = "".join(f",{v!r}" for v in values)
                fh.write(f"{emit_smiles(m.graph)},{m.key.hex()}{tail}\n")


def exported_heads(ck: Checkpoint) -> list[PolynomialHead]:
    if hasattr(ck.heads, "export"):
        return ck.heads.export()
    raise ValueError("group-structured heads have no per-property export")


def _size_sampler(ck: Checkpoint):
    sizes = np.array(sorted(ck.size_histogram), dtype=int)
    weights = np.array([ck.size_histogram[int(s)] for s in sizes], dtype=float)
    weights /= weights.sum()
    return sizes, weights


def _molecule_properties(ck: Checkpoint, g: MolecularGraph, zbar: np.ndarray):
    """Normalized property vector: built-ins computed on the graph, the rest
    predicted by the heads (flagged per entry)."""
    if hasattr(ck.heads, "export"):
        heads = ck.heads.export()
        predicted = [head_predict(heads[j], float(zbar[j]))
                     for j in range(len(ck.specs))]
    else:
        with torch.no_grad():
            row = torch.from_numpy(zbar).unsqueeze(0)
            predicted = ck.heads.predict_all(row).squeeze(0).tolist()
    values = np.zeros(len(ck.specs))
    sources = []
    for j, spec in enumerate(ck.specs):
        if spec.name in BUILTIN_PROPERTIES:
            values[j] = spec.normalize(compute_property(g, spec.name))
            sources.append("computed")
        else:
            values[j] = float(predicted[j])
            sources.append("predicted")
    return values, tuple(sources)


def sample_set(ck: Checkpoint, n: int, seed: int = 0,
               temperature: float = 1.0) -> GeneratedSet:
    """Draw n molecules: size from the training empirical distribution,
    node latents from the prior, valency-masked decoding."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    sizes, weights = _size_sampler(ck)
    latent = ck.config.latent_dim
    molecules = []
    with torch.no_grad():
        for i in range(n):
            n_nodes = int(rng.choice(sizes, p=weights))
            z = torch.from_numpy(rng.standard_normal((n_nodes, latent)))
            g = decode_sample(z, ck.decoder, ck.registry, temperature=temperature,
                              seed=int(rng.integers(2 ** 31)))
            zbar = z.mean(dim=0).numpy()
            values, sources = _molecule_properties(ck, g, zbar)
            molecules.append(GeneratedMolecule(g, canonical_key(g), values,
                                               sources, zbar, n_drawn=n_nodes))
    return GeneratedSet(molecules, tuple(s.name for s in ck.specs))


def basic_metrics(gen: GeneratedSet, train_keys: set[bytes]):
    """(validity, uniqueness, novelty) fractions under canonical-key identity."""
    n = len(gen)
    valid = sum(1 for m in gen.molecules if is_valid(m.graph)) / n
    distinct = set(gen.keys())
    unique = len(distinct) / n
    novel = (sum(1 for k in distinct if k not in train_keys) / len(distinct)
             if distinct else 0.0)
    return valid, unique, novel


# --- distribution comparison ---

def mmd(samples_a: np.ndarray, samples_b: np.ndarray, bandwidth: float = 1.0) -> float:
    """Squared-MMD V-statistic with a Gaussian kernel over feature vectors."""
    a = np.atleast_2d(np.asarray(samples_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(samples_b, dtype=np.float64))
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("empty sample set")

    def kernel_mean(x, y):
        d2 = ((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=2)
        return np.exp(-d2 / (2.0 * bandwidth ** 2)).mean()

    return float(kernel_mean(a, a) + kernel_mean(b, b) - 2.0 * kernel_mean(a, b))


def _stat_features(graphs, kind: str, max_degree: int, clustering_bins: int = 10):
    rows = []
    for g in graphs:
        stats = graph_statistics(g)
        if kind == "degree":
            h = np.zeros(max_degree + 1)
            counts = stats.degree_histogram
            h[:len(counts)] = counts
            rows.append(h / max(1, g.num_atoms))
        elif kind == "clustering":
            h, _ = np.histogram(stats.clustering, bins=clustering_bins, range=(0, 1))
            rows.append(h / max(1, g.num_atoms))
        elif kind == "orbit":
            rows.append(np.array([stats.total_orbits / max(1, g.num_atoms)]))
        else:
            raise ValueError(f"unknown statistic {kind!r}")
    return np.stack(rows)


def mmd_graph_statistics(gen_graphs, ref_graphs, bandwidth: float = 1.0):
    """MMD between normalized degree / clustering / orbit summaries."""
    max_degree = max(max((g.degree(v) for g in gs for v in range(g.num_atoms)),
                         default=0) for gs in (gen_graphs, ref_graphs))
    return {
        kind: mmd(_stat_features(gen_graphs, kind, max_degree),
                  _stat_features(ref_graphs, kind, max_degree), bandwidth)
        for kind in ("degree", "clustering", "orbit")
    }


def kld_property(generated: np.ndarray, reference: np.ndarray, bins: int = 50,
                 epsilon: float = 1e-8) -> float:
    """KL(reference || generated) over a shared-support histogram."""
    generated = np.asarray(generated, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if generated.size == 0 or reference.size == 0:
        raise ValueError("empty sample set")
    lo = min(generated.min(), reference.min())
    hi = max(generated.max(), reference.max())
    if hi == lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    p, _ = np.histogram(reference, bins=edges)
    q, _ = np.histogram(generated, bins=edges)
    p = p.astype(np.float64) + epsilon
    q = q.astype(np.float64) + epsilon
    p /= p.sum()
    q /= q.sum()
    return float(np.sum(p * np.log(p / q)))


# --- mutual information ---

def _rank_bins(column: np.ndarray, bins: int) -> np.ndarray:
    """Equal-frequency binning via ranks; invariant to monotone rescaling."""
    order = np.argsort(column, kind="stable")
    ranks = np.empty_like(order)
    ranks[order] = np.arange(column.shape[0])
    return (ranks * bins) // column.shape[0]


def _entropy(labels: np.ndarray, bins: int) -> float:
    counts = np.bincount(labels, minlength=bins).astype(np.float64)
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def mutual_information(x: np.ndarray, y: np.ndarray, bins: int = 20) -> float:
    """Histogram MI on equal-frequency bins, normalized by min entropy."""
    if np.all(x == x[0]) or np.all(y == y[0]):
        return 0.0
    bx = _rank_bins(x, bins)
    by = _rank_bins(y, bins)
    joint = np.zeros((bins, bins))
    np.add.at(joint, (bx, by), 1.0)
    joint /= joint.sum()
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / (px[:, None] * py[None, :])[nz])).sum())
    hx = _entropy(bx, bins)
    hy = _entropy(by, bins)
    norm = min(hx, hy)
    if norm <= 0:
        return 0.0
    return min(1.0, mi / norm)


def mi_matrix(zbar: np.ndarray, properties: np.ndarray, bins: int = 20) -> np.ndarray:
    """J x L normalized mutual information between latents and properties."""
    if zbar.shape[0] < 100:
        raise ValueError("need at least 100 samples for the MI estimate")
    n_props = properties.shape[1]
    n_latents = zbar.shape[1]
    out = np.zeros((n_props, n_latents))
    for j in range(n_props):
        for l in range(n_latents):
            out[j, l] = mutual_information(zbar[:, l], properties[:, j], bins)
    return out


# --- disentanglement metrics ---

def _discretize_factors(factors: np.ndarray, bins: int) -> np.ndarray:
    return np.stack([_rank_bins(factors[:, j], bins) for j in range(factors.shape[1])],
                    axis=1)


def beta_metric(codes: np.ndarray, factors: np.ndarray, bins: int = 10,
                n_probes: int = 2000, group: int = 16, seed: int = 0) -> float:
    """Linear-classifier accuracy at naming the factor held fixed across pairs."""
    from sklearn.linear_model import LogisticRegression

    rng = np.random.default_rng(seed)
    labels = _discretize_factors(factors, bins)
    n, j = labels.shape
    features = np.zeros((n_probes, codes.shape[1]))
    targets = np.zeros(n_probes, dtype=int)
    for p in range(n_probes):
        k = int(rng.integers(j))
        diffs = np.zeros(codes.shape[1])
        got = 0
        while got < group:
            a, b = rng.integers(n, size=2)
            if labels[a, k] != labels[b, k]:
                continue
            diffs += np.abs(codes[a] - codes[b])
            got += 1
        features[p] = diffs / group
        targets[p] = k
    half = n_probes // 2
    clf = LogisticRegression(max_iter=2000)
    clf.fit(features[:half], targets[:half])
    return float(clf.score(features[half:], targets[half:]))


def factor_metric(codes: np.ndarray, factors: np.ndarray, bins: int = 10,
                  n_probes: int = 2000, group: int = 64, seed: int = 0) -> float:
    """Majority-vote accuracy on the least-variance latent under a fixed factor."""
    rng = np.random.default_rng(seed)
    labels = _discretize_factors(factors, bins)
    n, j = labels.shape
    scale = codes.std(axis=0)
    scale[scale == 0] = 1.0
    votes = []
    for _ in range(n_probes):
        k = int(rng.integers(j))
        level = int(labels[rng.integers(n), k])
        members = np.where(labels[:, k] == level)[0]
        chosen = rng.choice(members, size=min(group, members.shape[0]), replace=True)
        variances = (codes[chosen] / scale).var(axis=0)
        votes.append((int(np.argmin(variances)), k))
    half = len(votes) // 2
    table = {}
    for dim, k in votes[:half]:
        counts = table.setdefault(dim, np.zeros(j))
        counts[k] += 1
    classifier = {dim: int(np.argmax(counts)) for dim, counts in table.items()}
    correct = sum(1 for dim, k in votes[half:] if classifier.get(dim, -1) == k)
    return correct / max(1, len(votes) - half)


def modularity_metric(mi: np.ndarray) -> float:
    """Deviation of each latent column from a one-nonzero-per-column template."""
    j, l = mi.shape
    if j < 2:
        raise ValueError("need at least 2 factors")
    scores = []
    for col in range(l):
        column = mi[:, col]
        theta = column.max()
        if theta <= 0:
            continue
        delta = ((column ** 2).sum() - theta ** 2) / (theta ** 2 * (j - 1))
        scores.append(1.0 - delta)
    return float(np.mean(scores)) if scores else 0.0


def dci_disentanglement(codes: np.ndarray, factors: np.ndarray, seed: int = 0) -> float:
    """Entropy-based disentanglement of permutation importances of a ridge model."""
    from sklearn.linear_model import Ridge

    rng = np.random.default_rng(seed)
    n, l = codes.shape
    j = factors.shape[1]
    importance = np.zeros((l, j))
    for k in range(j):
        model = Ridge(alpha=1.0)
        model.fit(codes, factors[:, k])
        base = np.mean((model.predict(codes) - factors[:, k]) ** 2)
        for dim in range(l):
            shuffled = codes.copy()
            shuffled[:, dim] = shuffled[rng.permutation(n), dim]
            perturbed = np.mean((model.predict(shuffled) - factors[:, k]) ** 2)
            importance[dim, k] = max(0.0, perturbed - base)
    total = importance.sum(axis=1, keepdims=True)
    active = total[:, 0] > 1e-12
    if not np.any(active):
        return 0.0
    p = importance[active] / total[active]
    plogp = np.zeros_like(p)
    nz = p > 0
    plogp[nz] = p[nz] * np.log(p[nz])
    entropies = -plogp.sum(axis=1) / np.log(j)
    weights = total[active, 0] / total[active, 0].sum()
    return float((weights * (1.0 - entropies)).sum())


def disentanglement_metrics(codes: np.ndarray, factors: np.ndarray, bins: int = 10,
                            n_probes: int = 2000, seed: int = 0) -> dict[str, float]:
    """beta_m, factor_m, dci, mod on (representation, factor) samples.

    Factors are continuous property columns; they are discretized into
    quantile bins internally where a metric needs discrete levels.
    """
    for j in range(factors.shape[1]):
        if np.unique(factors[:, j]).shape[0] < 2:
            raise ValueError(f"factor {j} has fewer than 2 levels")
    mi = mi_matrix(codes, factors) if codes.shape[0] >= 100 else None
    return {
        "beta_m": beta_metric(codes, factors, bins, n_probes, seed=seed),
        "factor_m": factor_metric(codes, factors, bins, n_probes, seed=seed),
        "dci": dci_disentanglement(codes, factors, seed=seed),
        "mod": modularity_metric(mi) if mi is not None else 0.0,
    }


# --- latent traversal ---

@dataclass
class TraversalPoint:
    z_value: float
    graph: MolecularGraph
    computed_properties: dict[str, float]    # raw units, built-ins only
    predicted_property: float                # F_j at the grid value, normalized


def shift_to_target(z: torch.Tensor, dim: int, value: float) -> torch.Tensor:
    """Uniformly shift coordinate `dim` of all node latents so the mean hits value."""
    shifted = z.clone()
    shifted[:, dim] += value - float(z[:, dim].mean())
    return shifted


def traverse(ck: Checkpoint, dim: int, lo: float, hi: float, steps: int,
             base_latents: torch.Tensor) -> list[TraversalPoint]:
    """Decode along an even grid of one targeted latent coordinate at
    temperature 0, others fixed."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not lo <= hi:
        raise ValueError("need lo <= hi")
    if dim >= ck.config.latent_dim or (ck.config.group_spec is None
                                       and dim >= ck.n_targeted):
        raise ValueError(f"dimension {dim} is not targeted")
    heads = exported_heads(ck)
    grid = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
    points = []
    with torch.no_grad():
        for value in grid:
            z = shift_to_target(base_latents, dim, float(value))
            g = decode_sample(z, ck.decoder, ck.registry, temperature=0.0)
            computed = {name: compute_property(g, name) for name in BUILTIN_PROPERTIES}
            predicted = float(head_predict(heads[dim], float(value)))
            points.append(TraversalPoint(float(value), g, computed, predicted))
    return points


# --- aggregate report ---

@dataclass
class MetricReport:
    validity: float
    uniqueness: float
    novelty: float
    mmd: dict[str, float]
    kld: dict[str, float]
    mi: np.ndarray
    disentanglement: dict[str, float] = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "validity": self.validity,
            "uniqueness": self.uniqueness,
            "novelty": self.novelty,
            "mmd": self.mmd,
            "kld": self.kld,
            "mi": [[float(v) for v in row] for row in self.mi],
            "disentanglement": self.disentanglement,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, indent=2)


def evaluate(ck: Checkpoint, dataset, n: int = 1000, seed: int = 0,
             with_disentanglement: bool = True) -> MetricReport:
    """End-to-end evaluation of a checkpoint against a reference dataset."""
    gen = sample_set(ck, n, seed=seed)
    train_records = dataset.train_records()
    train_keys = {r.key for r in train_records}
    validity, uniqueness, novelty = basic_metrics(gen, train_keys)

    ref_graphs = [r.graph for r in train_records]
    gen_graphs = [m.graph for m in gen.molecules]
    mmd_scores = mmd_graph_statistics(gen_graphs, ref_graphs)

    ref_props = np.stack([r.properties for r in train_records])
    gen_props = gen.property_matrix()
    kld_scores = {spec.name: kld_property(gen_props[:, j], ref_props[:, j])
                  for j, spec in enumerate(dataset.specs)}

    codes, factors = encode_dataset(ck, dataset, limit=5000)
    mi = mi_matrix(codes, factors) if codes.shape[0] >= 100 else np.zeros((0, 0))
    disent = {}
    if with_disentanglement and codes.shape[0] >= 200:
        disent = disentanglement_metrics(codes, factors, n_probes=1000)
    return MetricReport(validity, uniqueness, novelty, mmd_scores, kld_scores,
                        mi, disent)


def encode_dataset(ck: Checkpoint, dataset, limit: int | None = None, seed: int = 0):
    """Posterior-mean graph latents and property matrix for labeled records."""
    from .data import batch_from_records

    records = dataset.train_records()
    if limit is not None:
        records = records[:limit]
    n_max = ck.config.n_max or max(r.graph.num_atoms for r in records)
    codes = []
    with torch.no_grad():
        for start in range(0, len(records), 256):
            chunk = records[start:start + 256]
            batch = batch_from_records(chunk, n_max, dataset.registry)
            code = ck.encoder.encode(batch)
            codes.append(code.mu_bar().numpy())
    factors = np.stack([r.properties for r in records])
    return np.concatenate(codes), factors
