from .encoder import GraphEncoder, LatentCode, reparameterize, summarize
from .decoder import (
    DecoderState,
    GraphDecoder,
    decode_sample,
    legal_edge_mask,
    reconstruction_nll,
    teacher_decisions,
)
from .heads import (
    GroupHeadBank,
    GroupSpec,
    PolynomialHead,
    PropertyHeadBank,
    derivative,
    group_predict,
    nll,
    predict,
)
from .objectives import (
    LossBreakdown,
    LossWeights,
    NonFiniteLossError,
    derangement,
    dip_penalty,
    kl_per_dim,
    masked_kl,
    mono_direction_penalty,
    mono_gradient_penalty,
    mono_gradient_penalty_grouped,
    total_loss,
)

__all__ = [
    "GraphEncoder", "LatentCode", "reparameterize", "summarize",
    "DecoderState", "GraphDecoder", "decode_sample", "legal_edge_mask",
    "reconstruction_nll", "teacher_decisions",
    "GroupHeadBank", "GroupSpec", "PolynomialHead", "PropertyHeadBank",
    "derivative", "group_predict", "nll", "predict",
    "LossBreakdown", "LossWeights", "NonFiniteLossError", "derangement",
    "dip_penalty", "kl_per_dim", "masked_kl", "mono_direction_penalty",
    "mono_gradient_penalty", "mono_gradient_penalty_grouped", "total_loss",
]
