"""
Anatomical contracts of trust.

Each class c gets a BPA map built from the fallback mask M^c dilated by a
margin: at distance d from M^c, m^(c)(C \\ {c}) = 1 - φ(d) and
m^(c)(C) = φ(d). The per-voxel number w_c = φ(d) is all the fusion needs:
combining a probability with ⊕_c m^(c) reduces to p(c)·w_c renormalised.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Mapping, Tuple, Union

import numpy as np

from ..core.labels import LabelSpace, MaskLike
from ..core.volumes import GridMeta, MaskVolume, ScalarVolume
from ..dempster.bpa import Bpa, ClassProbability
from ..utils.constants import AGREEMENT_FLOOR, DENSE_BPA_MAX_CLASSES
from ..utils.exceptions import (
    ConfigError,
    ContradictionError,
    LabelSpaceError,
    PartitionError,
    ValidationError,
)
from ..utils.helpers import parallel_map
from ..utils.logger import get_logger
from .distance import distance_transform

logger = get_logger(__name__)


class ThresholdKind(Enum):
    """Shape of the margin."""

    HARD = "hard"
    EXPONENTIAL = "exp"

    @classmethod
    def parse(cls, value: Union[str, "ThresholdKind"]) -> "ThresholdKind":
        if isinstance(value, ThresholdKind):
            return value
        key = value.strip().lower()
        if key in ("exp", "exponential"):
            return cls.EXPONENTIAL
        if key == "hard":
            return cls.HARD
        raise ConfigError(f"unknown thresholding function {value!r}; expected 'hard' or 'exp'")


@dataclass(frozen=True)
class ThresholdingFn:
    """
    Non-increasing φ: R+ -> [0, 1] with φ(0) = 1.

    Attributes:
        kind: HARD (1 if d <= η else 0) or EXPONENTIAL (exp(-d/η))
        eta: Margin in mm; 0 is allowed for hard margins only
    """

    kind: ThresholdKind
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ThresholdKind.parse(self.kind))
        eta = float(self.eta)
        if not np.isfinite(eta) or eta < 0:
            raise ValidationError(f"margin must be finite and >= 0, got {self.eta}")
        if self.kind is ThresholdKind.EXPONENTIAL and eta == 0:
            raise ValidationError("exponential margins need eta > 0")
        object.__setattr__(self, "eta", eta)

    def __call__(self, d):
        d = np.asarray(d, dtype=np.float64)
        if self.kind is ThresholdKind.HARD:
            return (d <= self.eta).astype(np.float64)
        return np.exp(-d / self.eta)


def anatomical_weight(d: float, phi: ThresholdingFn) -> float:
    """w = m^(c)(C) = φ(d) for a voxel at distance d >= 0 from the class mask."""
    if d < 0:
        raise ValidationError(f"distance must be >= 0, got {d}")
    return float(phi(d))


@dataclass(frozen=True)
class AnatomicalWeights:
    """
    Per-voxel, per-class weights w_c(x) = m^(c)_x(C).

    Attributes:
        space: Label space
        meta: Grid geometry
        data: Array dims + (K,) in [0, 1]; every voxel has some w_c = 1
    """

    space: LabelSpace
    meta: GridMeta
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.shape != self.meta.dims + (self.space.K,):
            raise ValidationError(f"weights shape {data.shape} does not match grid and K={self.space.K}")
        if np.any(data < 0) or np.any(data > 1) or not np.all(np.isfinite(data)):
            raise ValidationError("anatomical weights must lie in [0, 1]")
        if np.any(data.max(axis=3) < 1.0):
            raise ValidationError("some voxel has no admissible class (no weight equals 1)")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def at(self, x: int, y: int, z: int) -> np.ndarray:
        return self.data[x, y, z]

    def class_weight(self, c: Union[int, str]) -> ScalarVolume:
        c = self.space.index(c) if isinstance(c, str) else c
        return ScalarVolume(self.meta, self.data[..., c])

    @classmethod
    def ones(cls, space: LabelSpace, meta: GridMeta) -> "AnatomicalWeights":
        return cls(space, meta, np.ones(meta.dims + (space.K,)))


def _check_partition(masks: List[MaskVolume]):
    meta = masks[0].meta
    for m in masks[1:]:
        meta.check_same(m.meta, "class masks")
    coverage = np.sum([m.data for m in masks], axis=0)
    if np.any(coverage != 1):
        bad = int(np.count_nonzero(coverage != 1))
        raise PartitionError(f"class masks do not partition the grid ({bad} voxels covered 0 or 2+ times)")


def build_anatomical(
    masks: Mapping[str, MaskVolume],
    margins: Mapping[str, float],
    kind: Union[str, ThresholdKind],
    space: LabelSpace,
    threads: int = 1,
) -> AnatomicalWeights:
    """
    Anatomical weights from fallback class masks and per-class margins.

    Args:
        masks: Class name -> fallback mask; must partition the grid
        margins: Class name -> margin η in mm
        kind: Thresholding function shape
        space: Label space fixing the class order
        threads: Thread cap for the per-class distance transforms

    Returns:
        AnatomicalWeights
    """
    missing = [n for n in space.names if n not in masks]
    if missing:
        raise LabelSpaceError(f"no fallback mask for classes {missing}")
    missing = [n for n in space.names if n not in margins]
    if missing:
        raise ConfigError(f"no margin for classes {missing}")

    ordered = [masks[n] for n in space.names]
    _check_partition(ordered)
    kind = ThresholdKind.parse(kind)
    meta = ordered[0].meta

    def class_weights(item: Tuple[str, MaskVolume]) -> np.ndarray:
        name, mask = item
        if mask.is_empty:
            logger.warning(f"Fallback mask of class {name!r} is empty; class excluded everywhere")
            return np.zeros(meta.dims)
        phi = ThresholdingFn(kind, margins[name])
        return phi(distance_transform(mask).data)

    columns = parallel_map(class_weights, list(zip(space.names, ordered)), threads)
    logger.info(f"Built anatomical weights for {space.K} classes ({kind.value} margins)")
    return AnatomicalWeights(space, meta, np.stack(columns, axis=3))


def per_class_bpas(weights: np.ndarray, space: LabelSpace) -> List[Bpa]:
    """The two-focal BPAs m^(c) at one voxel: C \\ {c} with 1 - w_c, C with w_c."""
    weights = np.asarray(weights, dtype=np.float64)
    full = space.full_bits
    out = []
    for c in range(space.K):
        w = float(weights[c])
        out.append(Bpa.from_mapping(space, {full ^ (1 << c): 1.0 - w, full: w}))
    return out


def anatomical_mass(weights: np.ndarray, subset: MaskLike) -> float:
    """
    m^anatomy(C \\ C') = Π_c [δ_c(C')(1 - w_c) + (1 - δ_c(C'))w_c].

    This is the unnormalised conjunctive mass; it equals the Dempster
    combination of the per-class BPAs whenever some w_c = 1 (no conflict).
    """
    weights = np.asarray(weights, dtype=np.float64)
    bits = int(subset)
    inside = ((bits >> np.arange(weights.size)) & 1).astype(bool)
    return float(np.prod(np.where(inside, 1.0 - weights, weights)))


def anatomical_bpa(weights: np.ndarray, space: LabelSpace) -> Bpa:
    """Full combined anatomical BPA at one voxel from the product formula."""
    if space.K > DENSE_BPA_MAX_CLASSES:
        raise ValidationError(f"full anatomical BPA limited to K <= {DENSE_BPA_MAX_CLASSES}")
    weights = np.asarray(weights, dtype=np.float64)
    full = space.full_bits
    dense = np.zeros(1 << space.K)
    for removed in range(1 << space.K):
        dense[full ^ removed] = anatomical_mass(weights, removed)
    dense[0] = 0.0
    agreement = dense.sum()
    if agreement <= AGREEMENT_FLOOR:
        raise ContradictionError("anatomical contracts are completely contradictory")
    return Bpa.from_dense(space, dense / agreement)


def reweight_anatomical(p: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Array form of p ⊕ m^anatomy over any leading shape.

    Returns:
        (combined probabilities, Σ_c p(c)w_c); voxels with a zero sum are left at 0
    """
    p = np.asarray(p, dtype=np.float64)
    weighted = p * weights
    totals = weighted.sum(axis=-1)
    safe = np.where(totals > 0, totals, 1.0)
    return weighted / safe[..., None], totals


def apply_anatomical(p: ClassProbability, weights: np.ndarray) -> ClassProbability:
    """
    (p ⊕ m^anatomy)(c) = p(c)w_c / Σ_c' p(c')w_c', in O(K).

    Raises:
        ContradictionError: when Σ_c p(c)w_c = 0
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (p.space.K,):
        raise ValidationError(f"need {p.space.K} weights, got shape {weights.shape}")
    combined, total = reweight_anatomical(p.p, weights)
    if float(total) <= AGREEMENT_FLOOR:
        raise ContradictionError("probability is completely contradictory with the anatomical contracts")
    return ClassProbability(p.space, combined)
