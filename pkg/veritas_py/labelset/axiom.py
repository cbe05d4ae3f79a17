"""
Randomised check of the label-set axiom L(p, g) = L(q, g) whenever q only
moves probability mass inside the annotated label-sets.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from ..core.labels import indicator_matrix
from ..utils.exceptions import ValidationError
from ..utils.logger import get_logger
from .marginalization import marginalize

logger = get_logger(__name__)

LossFn = Callable[[np.ndarray, np.ndarray], float]


@dataclass
class AxiomReport:
    """
    Outcome of `axiom_check`.

    Attributes:
        trials: Number of random instances
        max_marginal_violation: max |L(p, g) - L(Φ(p; g), g)|
        max_redistribution_violation: max |L(p, g) - L(q, g)|
        worst_trial: Index of the trial with the largest violation
    """

    trials: int
    max_marginal_violation: float
    max_redistribution_violation: float
    worst_trial: int

    @property
    def max_violation(self) -> float:
        return max(self.max_marginal_violation, self.max_redistribution_violation)

    def holds(self, tol: float = 1e-9) -> bool:
        return self.max_violation < tol


def random_partial_annotation(rng: np.random.Generator, n: int, K: int) -> np.ndarray:
    """One non-singleton label-set L' ⊊ L plus singletons outside it."""
    size = int(rng.integers(2, K)) if K > 2 else 1
    unsegmented = rng.choice(K, size=size, replace=False)
    l_prime = int(np.sum(1 << unsegmented))
    segmented = np.setdiff1d(np.arange(K), unsegmented)
    choices = np.concatenate([[l_prime], 1 << segmented]).astype(np.int64)
    return rng.choice(choices, size=n)


def redistribute(rng: np.random.Generator, p: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Random q with Σ_{c∈g_i} q_ic = Σ_{c∈g_i} p_ic and q_ic = p_ic outside g_i."""
    inside = indicator_matrix(g, p.shape[1])
    mass = np.where(inside, p, 0.0).sum(axis=1)
    shares = rng.dirichlet(np.ones(p.shape[1]), size=p.shape[0]) * inside
    shares /= shares.sum(axis=1, keepdims=True)
    return np.where(inside, shares * mass[:, None], p)


def axiom_check(
    loss_fn: LossFn,
    trials: int = 1000,
    n_voxels: int = 32,
    n_classes: Tuple[int, ...] = (3, 4, 5),
    seed: Optional[int] = 0,
) -> AxiomReport:
    """
    Compare a loss at p, at Φ(p; g) and at in-set redistributions of p.

    Args:
        loss_fn: Loss taking (p, g)
        trials: Number of random instances
        n_voxels: Voxels per instance
        n_classes: Class counts drawn from per instance
        seed: Random seed

    Returns:
        AxiomReport
    """
    if trials < 1:
        raise ValidationError("axiom_check needs at least one trial")
    rng = np.random.default_rng(seed)
    worst_marginal = 0.0
    worst_redistribution = 0.0
    worst_trial = 0
    worst = -1.0
    for t in range(trials):
        K = int(rng.choice(n_classes))
        g = random_partial_annotation(rng, n_voxels, K)
        p = rng.dirichlet(np.ones(K), size=n_voxels)
        q = redistribute(rng, p, g)
        base = loss_fn(p, g)
        marginal = abs(base - loss_fn(marginalize(p, g), g))
        moved = abs(base - loss_fn(q, g))
        worst_marginal = max(worst_marginal, marginal)
        worst_redistribution = max(worst_redistribution, moved)
        if max(marginal, moved) > worst:
            worst, worst_trial = max(marginal, moved), t
    name = getattr(loss_fn, "__name__", repr(loss_fn))
    logger.info(f"Axiom check of {name}: {trials} trials, max violation {worst:.3e}")
    return AxiomReport(trials, worst_marginal, worst_redistribution, worst_trial)
