from ._hod import (
    ConfigError,
    DataError,
    DimensionError,
    Error,
    InvalidBatchError,
    Model,
    NumericError,
    auroc,
    distance,
    fpr_at_tpr,
    gen_synthetic,
    hsup_loss,
    knn_scores,
    lift,
    manifold_violation,
    regularized_incomplete_beta,
    train,
    welch_t_test,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DimensionError",
    "Error",
    "InvalidBatchError",
    "Model",
    "NumericError",
    "auroc",
    "distance",
    "fpr_at_tpr",
    "gen_synthetic",
    "hsup_loss",
    "knn_scores",
    "lift",
    "manifold_violation",
    "regularized_incomplete_beta",
    "train",
    "welch_t_test",
]
