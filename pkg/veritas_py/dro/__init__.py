"""
Distributionally robust optimisation with hardness-weighted sampling.
"""

from .closed_forms import (
    hardness_probs,
    robust_loss,
    percentile_bound,
    kl_to_uniform,
    sampling_entropy,
    robust_objective,
    robust_loss_grid,
)
from .sampler import (
    SamplerState,
    HardnessWeightedSampler,
    sample_batch,
    importance_weights,
    update_stale,
)
from .toy import (
    TrainingMode,
    Dataset,
    LinearSoftmax,
    ToyResult,
    make_blobs,
    per_class_accuracy,
    worst_class_accuracy,
    toy_train,
    select_beta,
)

__all__ = [
    "hardness_probs",
    "robust_loss",
    "percentile_bound",
    "kl_to_uniform",
    "sampling_entropy",
    "robust_objective",
    "robust_loss_grid",
    "SamplerState",
    "HardnessWeightedSampler",
    "sample_batch",
    "importance_weights",
    "update_stale",
    "TrainingMode",
    "Dataset",
    "LinearSoftmax",
    "ToyResult",
    "make_blobs",
    "per_class_accuracy",
    "worst_class_accuracy",
    "toy_train",
    "select_beta",
]
