"""
Label-set losses.

Dice variants use
    L = 1 - (1/K) Σ_c 2 Σ_i q_ic p_ic / (Σ_i q_ic^α + Σ_i p_ic^α + ε)
and the converted losses apply a classical loss to (Φ(p; g), Ψ₀(g)).
"""

import numpy as np

from ..core.labels import indicator_matrix
from ..utils.constants import DEFAULT_DICE_ALPHA, DEFAULT_DICE_EPSILON
from ..utils.exceptions import PartitionError, ValidationError
from .marginalization import check_annotation, check_inputs, marginalize, psi0, singleton_targets


def _check_pair(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.ndim != 2 or p.shape != q.shape:
        raise ValidationError(f"prediction {p.shape} and target {q.shape} shapes differ")
    return p, q


def _check_alpha(alpha):
    if alpha not in (1, 2):
        raise ValidationError(f"alpha must be 1 or 2, got {alpha}")


def _dice_terms(p, q, alpha, eps):
    numerators = 2.0 * (q * p).sum(axis=0)
    denominators = (q ** alpha).sum(axis=0) + (p ** alpha).sum(axis=0) + eps
    return numerators, denominators


def mean_class_dice(p, q, alpha: int = DEFAULT_DICE_ALPHA, eps: float = DEFAULT_DICE_EPSILON) -> float:
    """Soft mean-class Dice loss between predictions p and soft targets q."""
    p, q = _check_pair(p, q)
    _check_alpha(alpha)
    numerators, denominators = _dice_terms(p, q, alpha, eps)
    return float(1.0 - np.mean(numerators / denominators))


def mean_class_dice_gradient(p, q, alpha: int = DEFAULT_DICE_ALPHA, eps: float = DEFAULT_DICE_EPSILON) -> np.ndarray:
    """∂L/∂p for `mean_class_dice`."""
    p, q = _check_pair(p, q)
    _check_alpha(alpha)
    numerators, denominators = _dice_terms(p, q, alpha, eps)
    d_den = alpha * p ** (alpha - 1)
    K = p.shape[1]
    return -(2.0 * q / denominators - numerators * d_den / denominators ** 2) / K


def check_leaf_structure(g, K: int) -> np.ndarray:
    """
    Annotations must take values in {L'} ∪ {{c} : c ∉ L'} for one L' ⊊ L.

    Returns:
        The validated annotations
    """
    g = check_annotation(g, K)
    multi = np.unique(g[(g & (g - 1)) != 0])
    if multi.size > 1:
        raise PartitionError(f"leaf-Dice allows one non-singleton label-set, found {multi.size}")
    if multi.size == 1:
        unsegmented = int(multi[0])
        if unsegmented == (1 << K) - 1:
            raise PartitionError("the non-singleton label-set must be a proper subset of the classes")
        singletons = g[(g & (g - 1)) == 0]
        if np.any(singletons & unsegmented):
            raise PartitionError("singleton annotations must lie outside the non-singleton label-set")
    return g


def leaf_dice(p, g, alpha: int = DEFAULT_DICE_ALPHA, eps: float = DEFAULT_DICE_EPSILON) -> float:
    """Leaf-Dice loss; only voxels annotated with a single class enter the numerators."""
    p, g = check_inputs(p, g)
    g = check_leaf_structure(g, p.shape[1])
    return mean_class_dice(p, singleton_targets(g, p.shape[1]), alpha, eps)


def leaf_dice_gradient(p, g, alpha: int = DEFAULT_DICE_ALPHA, eps: float = DEFAULT_DICE_EPSILON) -> np.ndarray:
    p, g = check_inputs(p, g)
    g = check_leaf_structure(g, p.shape[1])
    return mean_class_dice_gradient(p, singleton_targets(g, p.shape[1]), alpha, eps)


def marginal_dice(p, g, alpha: int = DEFAULT_DICE_ALPHA, eps: float = DEFAULT_DICE_EPSILON) -> float:
    """Mean-class Dice of (Φ(p; g), Ψ₀(g))."""
    p, g = check_inputs(p, g)
    return mean_class_dice(marginalize(p, g), psi0(g, p.shape[1]), alpha, eps)


def marginal_dice_gradient(p, g, alpha: int = DEFAULT_DICE_ALPHA, eps: float = DEFAULT_DICE_EPSILON) -> np.ndarray:
    """Mean-class Dice gradient at Φ(p; g), mapped back through Φ."""
    p, g = check_inputs(p, g)
    outer = mean_class_dice_gradient(marginalize(p, g), psi0(g, p.shape[1]), alpha, eps)
    return marginalize(outer, g)


def soft_target_dice(p, g, alpha: int = DEFAULT_DICE_ALPHA, eps: float = DEFAULT_DICE_EPSILON) -> float:
    """Mean-class Dice of (p, Ψ₀(g)); not invariant to in-set redistribution."""
    p, g = check_inputs(p, g)
    return mean_class_dice(p, psi0(g, p.shape[1]), alpha, eps)


def marginal_cross_entropy(p, g) -> float:
    """Mean cross-entropy of Ψ₀(g) against Φ(p; g), logs clipped at the smallest float."""
    p, g = check_inputs(p, g)
    q = psi0(g, p.shape[1])
    log_phi = np.log(np.maximum(marginalize(p, g), np.finfo(np.float64).tiny))
    return float(-(q * log_phi).sum(axis=1).mean())


def _check_block_uniform(p: np.ndarray, g: np.ndarray, blocks: np.ndarray, atol: float = 1e-9):
    """Reject p that is not constant across each block at the voxels annotated with another block."""
    K = p.shape[1]
    for block in blocks:
        members = indicator_matrix(int(block), K)
        if members.sum() < 2:
            continue
        inside = p[g != block][:, members]
        if inside.size and np.ptp(inside, axis=1).max() > atol:
            raise PartitionError(
                f"p varies inside block {int(block):#b} outside its annotated voxels; the block form needs it uniform"
            )


def partition_marginal_dice(p, g, alpha: int = DEFAULT_DICE_ALPHA, eps: float = DEFAULT_DICE_EPSILON) -> float:
    """
    Block form of the marginal Dice when the annotated label-sets are disjoint.

    With S_i = Σ_{c∈B} p_ic for each block B:

        L = 1 - (1/K) Σ_B 2|B|^(α-1) Σ_{g_i=B} S_i / (N_B + Σ_i S_i^α + ε|B|^α)

    This equals `marginal_dice` when p is uniform inside every block at the
    voxels not annotated with that block. That precondition is
    checked and a violation raises PartitionError.
    """
    p, g = check_inputs(p, g)
    _check_alpha(alpha)
    K = p.shape[1]
    blocks = np.unique(g)
    for i, a in enumerate(blocks):
        for b in blocks[i + 1:]:
            if int(a) & int(b):
                raise PartitionError("annotated label-sets overlap; the block form needs a partition")

    _check_block_uniform(p, g, blocks)

    total = 0.0
    for block in blocks:
        members = indicator_matrix(int(block), K)
        size = int(members.sum())
        S = p[:, members].sum(axis=1)
        annotated = g == block
        numerator = 2.0 * size ** (alpha - 1) * S[annotated].sum()
        denominator = annotated.sum() + (S ** alpha).sum() + eps * size ** alpha
        total += numerator / denominator
    return float(1.0 - total / K)


def loss_by_name(name: str):
    """Look up a label-set loss taking (p, g)."""
    try:
        return LABEL_SET_LOSSES[name]
    except KeyError:
        raise ValidationError(f"unknown loss {name!r}; known: {sorted(LABEL_SET_LOSSES)}") from None


LABEL_SET_LOSSES = {
    "leaf_dice": leaf_dice,
    "marginal_dice": marginal_dice,
    "soft_target_dice": soft_target_dice,
    "marginal_cross_entropy": marginal_cross_entropy,
}
