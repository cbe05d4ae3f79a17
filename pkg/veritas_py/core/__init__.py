"""
Core module: label spaces, voxel-grid containers and the volume file format.
"""

from .labels import LabelSpace, SubsetMask, indicator_matrix
from .conditions import Condition
from .volumes import (
    GridMeta,
    ScalarVolume,
    MaskVolume,
    ProbabilityVolume,
    LabelSetVolume,
    argmax_labels,
    class_masks,
    renormalize,
)
from .io import read_volume, write_volume
from .preview import save_slice_png

__all__ = [
    "LabelSpace",
    "SubsetMask",
    "indicator_matrix",
    "Condition",
    "GridMeta",
    "ScalarVolume",
    "MaskVolume",
    "ProbabilityVolume",
    "LabelSetVolume",
    "argmax_labels",
    "class_masks",
    "renormalize",
    "read_volume",
    "write_volume",
    "save_slice_png",
]
