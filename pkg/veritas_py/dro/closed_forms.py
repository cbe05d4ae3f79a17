"""
KL-divergence closed forms for distributionally robust optimisation.

For the KL ball, the worst-case distribution over the n training examples
is softmax(βL), and the robust loss is the scaled log-mean-exp of the
per-example losses.
"""

from typing import Optional

import numpy as np
from scipy import stats
from scipy.special import logsumexp, softmax, xlogy

from ..utils.exceptions import ValidationError


def _losses(L) -> np.ndarray:
    L = np.asarray(L, dtype=np.float64).ravel()
    if L.size == 0:
        raise ValidationError("loss vector is empty")
    if not np.all(np.isfinite(L)):
        raise ValidationError("losses must be finite")
    return L


def hardness_probs(L, beta: float) -> np.ndarray:
    """p = softmax(βL), computed with a max shift."""
    if not beta >= 0:
        raise ValidationError(f"beta must be >= 0, got {beta}")
    return softmax(beta * _losses(L))


def robust_loss(L, beta: float) -> float:
    """R = (1/β) log((1/n) Σ_i exp(βL_i)); mean(L) <= R <= max(L)."""
    if not beta > 0:
        raise ValidationError(f"beta must be > 0, got {beta}")
    L = _losses(L)
    value = (logsumexp(beta * L) - np.log(L.size)) / beta
    return float(np.clip(value, L.mean(), L.max()))


def percentile_bound(L, beta: float, alpha_q: float) -> float:
    """
    Chernoff bound on the (1 - α) quantile of the losses.

    l̂ = (1/β) log((1/(α n)) Σ_i exp(βL_i)); at most a fraction α of the
    losses reach it.
    """
    if not beta > 0:
        raise ValidationError(f"beta must be > 0, got {beta}")
    if not 0.0 < alpha_q <= 1.0:
        raise ValidationError(f"alpha must be in (0, 1], got {alpha_q}")
    L = _losses(L)
    return float((logsumexp(beta * L) - np.log(alpha_q * L.size)) / beta)


def kl_to_uniform(q) -> float:
    """KL(q ‖ uniform) = Σ q_i log(n q_i)."""
    q = np.asarray(q, dtype=np.float64).ravel()
    return float(xlogy(q, q * q.size).sum())


def sampling_entropy(p) -> float:
    """Shannon entropy (nats) of a sampling distribution."""
    return float(stats.entropy(np.asarray(p, dtype=np.float64).ravel()))


def robust_objective(L, q, beta: float) -> float:
    """⟨L, q⟩ - KL(q ‖ uniform)/β for a candidate distribution q."""
    return float(np.dot(_losses(L), q) - kl_to_uniform(q) / beta)


def robust_loss_grid(L, beta: float, step: Optional[float] = None) -> float:
    """
    Brute-force max_q ⟨L, q⟩ - KL(q ‖ uniform)/β over a simplex grid.

    Supports n = 2 (default step 1e-5) and n = 3 (default step 2e-3).
    """
    if not beta > 0:
        raise ValidationError(f"beta must be > 0, got {beta}")
    L = _losses(L)
    if L.size == 2:
        step = step or 1e-5
        t = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
        q = np.stack([t, 1.0 - t], axis=1)
    elif L.size == 3:
        step = step or 2e-3
        m = int(round(1.0 / step))
        i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
        keep = i + j <= m
        a, b = i[keep] / m, j[keep] / m
        q = np.stack([a, b, np.clip(1.0 - a - b, 0.0, None)], axis=1)
    else:
        raise ValidationError(f"grid oracle supports n = 2 or 3, got {L.size}")
    kl = xlogy(q, q * L.size).sum(axis=1)
    return float(np.max(q @ L - kl / beta))
