"""
Desk-scale ERM vs DRO experiment.

A linear softmax classifier is trained by plain stochastic gradient steps
on 2-D Gaussian blobs with a rare class. ERM samples uniformly; DRO samples
with the hardness-weighted sampler and reweights each example's gradient
by its clipped importance weight. The gradient math is shared.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from ..utils.constants import DEFAULT_W_MAX, DEFAULT_W_MIN
from ..utils.exceptions import DivergenceError, ValidationError
from ..utils.helpers import resolve_seed
from ..utils.logger import get_logger
from .sampler import HardnessWeightedSampler

logger = get_logger(__name__)

BLOB_CENTERS = ((-2.0, 0.0), (2.0, 0.0), (0.0, 2.5))
BETA_CANDIDATES = (1.0, 10.0, 100.0)


class TrainingMode(Enum):
    ERM = "erm"
    DRO = "dro"

    @classmethod
    def parse(cls, value) -> "TrainingMode":
        if isinstance(value, TrainingMode):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(f"unknown training mode {value!r}; expected 'erm' or 'dro'") from None


@dataclass(frozen=True)
class Dataset:
    """Labelled 2-D points."""

    X: np.ndarray
    y: np.ndarray
    n_classes: int

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValidationError("dataset needs X of shape (n, d) and one label per row")
        if self.y.size == 0:
            raise ValidationError("dataset is empty")
        if np.any(self.y < 0) or np.any(self.y >= self.n_classes):
            raise ValidationError("labels out of range")

    @property
    def n(self) -> int:
        return self.y.size


def make_blobs(
    counts: Sequence[int] = (500, 500, 10),
    centers: Sequence[Tuple[float, float]] = BLOB_CENTERS,
    std: float = 1.0,
    seed: Optional[int] = None,
) -> Dataset:
    """
    Isotropic Gaussian blobs, `counts[c]` points around `centers[c]`.

    The default counts keep about 1% of the points in the last class.
    """
    if len(counts) != len(centers):
        raise ValidationError("one count per blob centre is required")
    rng = np.random.default_rng(resolve_seed(seed))
    X, y = [], []
    for c, (count, center) in enumerate(zip(counts, centers)):
        X.append(rng.normal(loc=center, scale=std, size=(int(count), len(center))))
        y.append(np.full(int(count), c))
    order = rng.permutation(int(sum(counts)))
    return Dataset(np.concatenate(X)[order], np.concatenate(y)[order], len(counts))


class LinearSoftmax:
    """Linear softmax classifier with a bias column."""

    def __init__(self, n_features: int, n_classes: int):
        self.W = np.zeros((n_features + 1, n_classes))

    @staticmethod
    def _design(X: np.ndarray) -> np.ndarray:
        return np.hstack([X, np.ones((X.shape[0], 1))])

    def logits(self, X: np.ndarray) -> np.ndarray:
        return self._design(X) @ self.W

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(X), axis=1)

    def losses(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Per-example cross-entropy."""
        z = self.logits(X)
        return logsumexp(z, axis=1) - z[np.arange(y.size), y]

    def gradient(self, X: np.ndarray, y: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Gradient of the mean of weights_i · loss_i."""
        A = self._design(X)
        residual = softmax(A @ self.W, axis=1)
        residual[np.arange(y.size), y] -= 1.0
        return A.T @ (residual * weights[:, None]) / y.size


def per_class_accuracy(model: LinearSoftmax, data: Dataset) -> np.ndarray:
    predictions = model.predict(data.X)
    acc = np.full(data.n_classes, np.nan)
    for c in range(data.n_classes):
        members = data.y == c
        if members.any():
            acc[c] = float(np.mean(predictions[members] == c))
    return acc


@dataclass
class ToyResult:
    """
    Output of `toy_train`.

    Attributes:
        model: Trained classifier
        history: One row per epoch: epoch, mean_loss, acc_class_<c>, entropy
        per_class_accuracy: Final training-set accuracy per class
    """

    model: LinearSoftmax
    history: List[Dict[str, float]] = field(default_factory=list)
    per_class_accuracy: Optional[np.ndarray] = None

    @property
    def final_mean_loss(self) -> float:
        return self.history[-1]["mean_loss"]


def toy_train(
    dataset: Dataset,
    mode="dro",
    beta: float = 10.0,
    lr: float = 0.1,
    epochs: int = 20,
    batch_size: int = 32,
    seed: Optional[int] = None,
    importance: bool = True,
    w_min: float = DEFAULT_W_MIN,
    w_max: float = DEFAULT_W_MAX,
) -> ToyResult:
    """
    Train the classifier with ERM or hardness-weighted DRO.

    Args:
        dataset: Training data
        mode: "erm" or "dro"
        beta: DRO robustness parameter
        lr: Step size
        epochs: Passes of ceil(n / batch_size) steps
        batch_size: Examples per step
        seed: Sampling seed (falls back to VERITAS_SEED)
        importance: Apply the clipped importance weights in DRO mode

    Returns:
        ToyResult
    """
    mode = TrainingMode.parse(mode)
    if epochs < 1 or batch_size < 1 or not lr > 0:
        raise ValidationError("epochs, batch_size and lr must be positive")
    seed = resolve_seed(seed)
    model = LinearSoftmax(dataset.X.shape[1], dataset.n_classes)
    initial = model.losses(dataset.X, dataset.y)

    sampler = None
    rng = None
    if mode is TrainingMode.DRO:
        sampler = HardnessWeightedSampler(initial, beta, w_min, w_max, seed)
    else:
        rng = np.random.default_rng(seed)
        uniform = np.full(dataset.n, 1.0 / dataset.n)

    steps_per_epoch = -(-dataset.n // batch_size)
    result = ToyResult(model)
    for epoch in range(1, epochs + 1):
        for _ in range(steps_per_epoch):
            if sampler is not None:
                batch = sampler.sample(batch_size)
            else:
                batch = rng.choice(dataset.n, size=batch_size, replace=True, p=uniform)
            Xb, yb = dataset.X[batch], dataset.y[batch]
            batch_losses = model.losses(Xb, yb)
            if not np.all(np.isfinite(batch_losses)):
                raise DivergenceError(f"non-finite training loss at epoch {epoch}")
            weights = np.ones(batch_size)
            if sampler is not None:
                if importance:
                    weights = sampler.weights(batch, batch_losses)
                sampler.update(batch, batch_losses)
            model.W -= lr * model.gradient(Xb, yb, weights)

        losses = model.losses(dataset.X, dataset.y)
        mean_loss = float(losses.mean())
        if not np.isfinite(mean_loss):
            raise DivergenceError(f"non-finite mean loss after epoch {epoch}")
        row = {"epoch": epoch, "mean_loss": mean_loss}
        for c, acc in enumerate(per_class_accuracy(model, dataset)):
            row[f"acc_class_{c}"] = float(acc)
        row["entropy"] = sampler.entropy if sampler is not None else float(np.log(dataset.n))
        result.history.append(row)
        logger.debug(f"{mode.value} epoch {epoch}: mean loss {mean_loss:.5f}")

    result.per_class_accuracy = per_class_accuracy(model, dataset)
    logger.info(f"{mode.value} training done: mean loss {result.final_mean_loss:.5f}")
    return result


def worst_class_accuracy(model: LinearSoftmax, data: Dataset) -> float:
    return float(np.nanmin(per_class_accuracy(model, data)))


def select_beta(
    train: Dataset,
    validation: Dataset,
    betas: Sequence[float] = BETA_CANDIDATES,
    **train_kwargs,
) -> Tuple[float, Dict[float, float]]:
    """
    Pick β by worst-class accuracy on a validation split.

    Returns:
        (best β, {β: validation worst-class accuracy}); ties go to the first β
    """
    if not betas:
        raise ValidationError("select_beta needs at least one candidate")
    scores = {}
    for beta in betas:
        result = toy_train(train, mode=TrainingMode.DRO, beta=beta, **train_kwargs)
        scores[beta] = worst_class_accuracy(result.model, validation)
    best = max(betas, key=lambda b: scores[b])
    logger.info(f"Selected beta={best:g} from {dict(scores)}")
    return best, scores
