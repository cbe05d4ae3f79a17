"""
Marginalisation Φ and the maximum-entropy encoding Ψ₀ of label-set annotations.

Predictions are (N, K) arrays of per-voxel probabilities; annotations are
length-N arrays of subset bitmasks.
"""

from typing import Tuple

import numpy as np

from ..core.labels import indicator_matrix
from ..utils.exceptions import LabelSpaceError, ValidationError


def check_annotation(g, K: int) -> np.ndarray:
    """Validate label-set annotations: non-empty subsets of K classes."""
    g = np.asarray(g)
    if g.ndim != 1:
        raise ValidationError(f"annotations must be a flat array, got shape {g.shape}")
    if not np.issubdtype(g.dtype, np.integer):
        raise ValidationError("annotations must be integer bitmasks")
    g = g.astype(np.int64)
    if np.any(g <= 0):
        raise LabelSpaceError("every annotation must be a non-empty label-set")
    if np.any(g >> K):
        raise LabelSpaceError(f"annotation uses classes outside the first {K}")
    return g


def check_inputs(p, g) -> Tuple[np.ndarray, np.ndarray]:
    """Validate a prediction/annotation pair; rows of p need not sum to 1 exactly."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2:
        raise ValidationError(f"predictions must have shape (N, K), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValidationError("predictions must be finite")
    g = check_annotation(g, p.shape[1])
    if g.shape[0] != p.shape[0]:
        raise ValidationError(f"{p.shape[0]} predictions but {g.shape[0]} annotations")
    return p, g


def marginalize(p, g) -> np.ndarray:
    """
    Φ(p; g): inside each g_i the channels are replaced by their mean.

    Φ is a per-row orthogonal projection, so it is idempotent and its own
    adjoint; it also maps gradients back from Φ(p) to p.
    """
    p, g = check_inputs(p, g)
    inside = indicator_matrix(g, p.shape[1])
    sizes = inside.sum(axis=1)
    means = np.where(inside, p, 0.0).sum(axis=1) / sizes
    return np.where(inside, means[:, None], p)


def psi0(g, K: int) -> np.ndarray:
    """Ψ₀(g): uniform over g_i, zero elsewhere."""
    g = check_annotation(g, K)
    inside = indicator_matrix(g, K).astype(np.float64)
    return inside / inside.sum(axis=1, keepdims=True)


def singleton_targets(g, K: int) -> np.ndarray:
    """One-hot rows where g_i is a singleton, zero rows elsewhere."""
    g = check_annotation(g, K)
    singleton = (g & (g - 1)) == 0
    return indicator_matrix(g, K).astype(np.float64) * singleton[:, None]
