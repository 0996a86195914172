"""Zero-knowledge certificates of model fairness over the Goldilocks field."""

from .fairness import (
    AggregatedStats,
    Dataset,
    DimensionMismatch,
    EmptyGroupError,
    Model,
    aggregate_stats,
    dnn_fairness_score,
    fairness_score,
    group_metrics,
    lr_fairness_score,
    model_infer,
    predict,
)
from .field import ExtElement, FieldElement, P, dequantize, quantize
from .protocols import (
    Params,
    ProofError,
    commit_dataset,
    commit_model,
    prove_aggregate_stats,
    prove_dnn_fairness,
    prove_fairness,
    prove_lr_fairness,
    verify_fairness,
    verify_stats,
)
from .spectral import spectral_prove, spectral_verify

__all__ = [
    "AggregatedStats",
    "Dataset",
    "DimensionMismatch",
    "EmptyGroupError",
    "ExtElement",
    "FieldElement",
    "Model",
    "P",
    "Params",
    "ProofError",
    "aggregate_stats",
    "commit_dataset",
    "commit_model",
    "dequantize",
    "dnn_fairness_score",
    "fairness_score",
    "group_metrics",
    "lr_fairness_score",
    "model_infer",
    "predict",
    "prove_aggregate_stats",
    "prove_dnn_fairness",
    "prove_fairness",
    "prove_lr_fairness",
    "quantize",
    "spectral_prove",
    "spectral_verify",
    "verify_fairness",
    "verify_stats",
]
