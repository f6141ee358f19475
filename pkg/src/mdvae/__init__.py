"""Controllable molecular-graph generation: a valency-constrained graph VAE
with disentangled, monotonically property-tied latent dimensions."""

from . import chem, data, evaluation, nn, training
from .chem import (
    AtomRegistry,
    AtomSpec,
    MolecularGraph,
    canonical_key,
    emit_smiles,
    graph_statistics,
    is_valid,
    parse_smiles,
)
from .data import Batch, Dataset, DatasetRecord, PropertySpec, compute_property, make_batches
from .nn import (
    GraphDecoder,
    GraphEncoder,
    GroupHeadBank,
    GroupSpec,
    LatentCode,
    LossWeights,
    PolynomialHead,
    PropertyHeadBank,
    decode_sample,
    reconstruction_nll,
    reparameterize,
    summarize,
    total_loss,
)
from .training import Checkpoint, TrainConfig, load_checkpoint, save_checkpoint, train
from .evaluation import (
    GeneratedSet,
    MetricReport,
    basic_metrics,
    disentanglement_metrics,
    evaluate,
    kld_property,
    mi_matrix,
    mmd,
    sample_set,
    traverse,
)

__version__ = "0.1.0"
