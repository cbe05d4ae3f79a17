"""
Label-set losses for partially annotated segmentations.
"""

from .marginalization import marginalize, psi0, singleton_targets, check_annotation
from .losses import (
    mean_class_dice,
    mean_class_dice_gradient,
    leaf_dice,
    leaf_dice_gradient,
    marginal_dice,
    marginal_dice_gradient,
    soft_target_dice,
    marginal_cross_entropy,
    partition_marginal_dice,
    loss_by_name,
    LABEL_SET_LOSSES,
)
from .axiom import AxiomReport, axiom_check, random_partial_annotation, redistribute

__all__ = [
    "marginalize",
    "psi0",
    "singleton_targets",
    "check_annotation",
    "mean_class_dice",
    "mean_class_dice_gradient",
    "leaf_dice",
    "leaf_dice_gradient",
    "marginal_dice",
    "marginal_dice_gradient",
    "soft_target_dice",
    "marginal_cross_entropy",
    "partition_marginal_dice",
    "loss_by_name",
    "LABEL_SET_LOSSES",
    "AxiomReport",
    "axiom_check",
    "random_partial_annotation",
    "redistribute",
]
