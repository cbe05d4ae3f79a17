"""
Voxel-grid containers.

Arrays are indexed [x, y, z] (plus a trailing channel axis for
multi-channel volumes). Volumes are immutable: arrays are copied on
construction and flagged read-only.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..utils.constants import MAX_CLASSES, PROBABILITY_TOLERANCE
from ..utils.exceptions import GridMismatchError, LabelSpaceError, ValidationError
from .labels import LabelSpace


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GridMeta:
    """
    Grid geometry.

    Attributes:
        dims: Voxel counts (x, y, z), each >= 1
        spacing: Millimetres per voxel (sx, sy, sz), each > 0
    """

    dims: Tuple[int, int, int]
    spacing: Tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        spacing = tuple(float(s) for s in self.spacing)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ValidationError(f"dims must be three integers >= 1, got {self.dims}")
        if len(spacing) != 3 or any(not np.isfinite(s) or s <= 0 for s in spacing):
            raise ValidationError(f"spacing must be three reals > 0, got {self.spacing}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)

    @property
    def n_voxels(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    def check_same(self, other: "GridMeta", what: str = "volumes"):
        """Raise GridMismatchError unless both grids are identical."""
        if self != other:
            raise GridMismatchError(
                f"grid mismatch between {what}: {self.dims}@{self.spacing} vs "
                f"{other.dims}@{other.spacing}"
            )


def _check_shape(meta: GridMeta, data: np.ndarray, channels: int = 0):
    expected = meta.dims + ((channels,) if channels else ())
    if data.shape != expected:
        raise ValidationError(f"data shape {data.shape} does not match grid {expected}")


@dataclass(frozen=True)
class ScalarVolume:
    """
    Real-valued volume, optionally multi-channel (e.g. a displacement field).

    Attributes:
        meta: Grid geometry
        data: Array of shape dims or dims + (channels,), all finite
    """

    meta: GridMeta
    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data, np.float64)
        if data.ndim == 3:
            _check_shape(self.meta, data)
        elif data.ndim == 4:
            _check_shape(self.meta, data, data.shape[3])
        else:
            raise ValidationError(f"scalar volume must be 3D or 4D, got {data.ndim}D")
        if not np.all(np.isfinite(data)):
            raise ValidationError("scalar volume contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 3 else self.data.shape[3]


@dataclass(frozen=True)
class MaskVolume:
    """Binary volume."""

    meta: GridMeta
    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data, bool)
        _check_shape(self.meta, data)
        object.__setattr__(self, "data", data)

    @property
    def count(self) -> int:
        return int(self.data.sum())

    @property
    def is_empty(self) -> bool:
        return not self.data.any()

    def union(self, other: "MaskVolume") -> "MaskVolume":
        self.meta.check_same(other.meta, "masks")
        return MaskVolume(self.meta, self.data | other.data)


def renormalize(data: np.ndarray) -> np.ndarray:
    """Divide every voxel's channels by their sum. Idempotent up to rounding."""
    data = np.asarray(data, dtype=np.float64)
    totals = data.sum(axis=-1, keepdims=True)
    if np.any(totals <= 0):
        raise ValidationError("cannot renormalize voxels with zero total probability")
    return data / totals


@dataclass(frozen=True)
class ProbabilityVolume:
    """
    Per-voxel class probabilities.

    Attributes:
        meta: Grid geometry
        data: Array of shape dims + (K,), non-negative, channels sum to 1 within 1e-6
    """

    meta: GridMeta
    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data, np.float64)
        if data.ndim != 4:
            raise ValidationError(f"probability volume must be 4D, got {data.ndim}D")
        _check_shape(self.meta, data, data.shape[3])
        if not np.all(np.isfinite(data)):
            raise ValidationError("probability volume contains non-finite values")
        if np.any(data < 0):
            raise ValidationError("probability volume has negative channels")
        worst = float(np.max(np.abs(data.sum(axis=3) - 1.0)))
        if worst > PROBABILITY_TOLERANCE:
            raise ValidationError(f"channel sums deviate from 1 by up to {worst:.3g}")
        object.__setattr__(self, "data", data)

    @property
    def K(self) -> int:
        return self.data.shape[3]

    def renormalized(self) -> "ProbabilityVolume":
        return ProbabilityVolume(self.meta, renormalize(self.data))

    def channel(self, c: int) -> ScalarVolume:
        return ScalarVolume(self.meta, self.data[..., c])


@dataclass(frozen=True)
class LabelSetVolume:
    """
    Per-voxel subset annotation.

    Attributes:
        meta: Grid geometry
        K: Number of classes in the label space
        data: uint32 bitmasks of shape dims, every voxel non-empty
    """

    meta: GridMeta
    K: int
    data: np.ndarray

    def __post_init__(self):
        if not 1 <= self.K <= MAX_CLASSES:
            raise LabelSpaceError(f"K must be in [1, {MAX_CLASSES}], got {self.K}")
        data = _frozen(self.data, np.uint32)
        _check_shape(self.meta, data)
        if np.any(data == 0):
            raise ValidationError("label-set volume has voxels with an empty subset")
        if np.any(data >> np.uint32(self.K)):
            raise LabelSpaceError(f"label-set volume has bits outside the low {self.K}")
        object.__setattr__(self, "data", data)

    def is_singletons(self) -> bool:
        d = self.data
        return bool(np.all((d & (d - np.uint32(1))) == 0))


def argmax_labels(pv: ProbabilityVolume) -> LabelSetVolume:
    """Singleton of the most probable channel per voxel; ties go to the lowest index."""
    winners = np.argmax(pv.data, axis=3).astype(np.uint32)
    return LabelSetVolume(pv.meta, pv.K, np.left_shift(np.uint32(1), winners))


def class_masks(labels: LabelSetVolume, space: LabelSpace) -> Dict[str, MaskVolume]:
    """
    Split a singleton label-set volume into one mask per class.

    Args:
        labels: Hard labels, one class per voxel
        space: Label space naming the classes

    Returns:
        Mapping class name -> mask; the masks partition the grid
    """
    if labels.K != space.K:
        raise LabelSpaceError(f"label volume has K={labels.K}, space has K={space.K}")
    if not labels.is_singletons():
        raise ValidationError("class masks need a singleton label volume")
    return {
        name: MaskVolume(labels.meta, (labels.data >> np.uint32(c)) & np.uint32(1))
        for c, name in enumerate(space.names)
    }
