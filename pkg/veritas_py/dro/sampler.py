"""
Hardness-weighted sampling.

The sampler keeps a stale loss per training example, draws batches from
softmax(β·stale losses) and returns clipped importance weights that
correct for the staleness.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..utils.constants import DEFAULT_W_MAX, DEFAULT_W_MIN, MAX_EXP_ARG
from ..utils.exceptions import ValidationError
from ..utils.helpers import resolve_seed
from ..utils.logger import get_logger
from .closed_forms import hardness_probs, sampling_entropy


@dataclass
class SamplerState:
    """
    Stale losses and sampling settings.

    Attributes:
        losses: Stale loss per example
        beta: Robustness parameter, > 0
        w_min, w_max: Importance weight clip bounds
        seed: Random seed (falls back to VERITAS_SEED)
    """

    losses: np.ndarray
    beta: float
    w_min: float = DEFAULT_W_MIN
    w_max: float = DEFAULT_W_MAX
    seed: Optional[int] = None
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.losses = np.array(self.losses, dtype=np.float64, copy=True).ravel()
        if self.losses.size == 0:
            raise ValidationError("sampler needs at least one example")
        if not np.all(np.isfinite(self.losses)):
            raise ValidationError("stale losses must be finite")
        if not self.beta > 0:
            raise ValidationError(f"beta must be > 0, got {self.beta}")
        if not 0 < self.w_min <= 1 <= self.w_max:
            raise ValidationError(f"need 0 < w_min <= 1 <= w_max, got ({self.w_min}, {self.w_max})")
        self.seed = resolve_seed(self.seed)
        self.rng = np.random.default_rng(self.seed)

    @property
    def n(self) -> int:
        return self.losses.size


def _check_batch(state: SamplerState, batch) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.int64).ravel()
    if np.any(batch < 0) or np.any(batch >= state.n):
        raise ValidationError(f"batch index out of range [0, {state.n})")
    return batch


def sample_batch(state: SamplerState, b: int) -> np.ndarray:
    """Draw b indices i.i.d. (with replacement) from softmax(β·L)."""
    if b < 1:
        raise ValidationError(f"batch size must be >= 1, got {b}")
    return state.rng.choice(state.n, size=b, replace=True, p=hardness_probs(state.losses, state.beta))


def importance_weights(state: SamplerState, batch, batch_losses) -> np.ndarray:
    """clip(exp(β (L_new - L_stale)), w_min, w_max) for the batch."""
    batch = _check_batch(state, batch)
    new = np.asarray(batch_losses, dtype=np.float64).ravel()
    if new.shape != batch.shape:
        raise ValidationError("one new loss per batch index is required")
    exponent = np.minimum(state.beta * (new - state.losses[batch]), MAX_EXP_ARG)
    return np.clip(np.exp(exponent), state.w_min, state.w_max)


def update_stale(state: SamplerState, batch, new_losses):
    """Overwrite the stale losses of the batch entries only."""
    batch = _check_batch(state, batch)
    new = np.asarray(new_losses, dtype=np.float64).ravel()
    if new.shape != batch.shape:
        raise ValidationError("one new loss per batch index is required")
    if not np.all(np.isfinite(new)):
        raise ValidationError("new losses must be finite")
    state.losses[batch] = new


class HardnessWeightedSampler:
    """
    Training-loop facade over SamplerState.

    Example:
        sampler = HardnessWeightedSampler(initial_losses, beta=10.0, seed=0)
        batch = sampler.sample(32)
        weights = sampler.weights(batch, losses)
        sampler.update(batch, losses)
    """

    def __init__(self, initial_losses, beta: float, w_min: float = DEFAULT_W_MIN,
                 w_max: float = DEFAULT_W_MAX, seed: Optional[int] = None):
        self.state = SamplerState(initial_losses, beta, w_min, w_max, seed)
        self.logger = get_logger(__name__)
        self.logger.debug(f"Hardness-weighted sampler over {self.state.n} examples, beta={beta}")

    @property
    def probs(self) -> np.ndarray:
        return hardness_probs(self.state.losses, self.state.beta)

    @property
    def entropy(self) -> float:
        return sampling_entropy(self.probs)

    def sample(self, b: int) -> np.ndarray:
        return sample_batch(self.state, b)

    def weights(self, batch, batch_losses) -> np.ndarray:
        return importance_weights(self.state, batch, batch_losses)

    def update(self, batch, new_losses):
        update_stale(self.state, batch, new_losses)
