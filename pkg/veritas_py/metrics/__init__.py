"""
Segmentation metrics and margin tuning.
"""

from .overlap import dice
from .surface import surface_voxels, surface_distances, directed_hd95, hd95, hd95_fn
from .margins import MarginTable, tune_margin, tune_margin_table, margin_for_other_pathologies

__all__ = [
    "dice",
    "surface_voxels",
    "surface_distances",
    "directed_hd95",
    "hd95",
    "hd95_fn",
    "MarginTable",
    "tune_margin",
    "tune_margin_table",
    "margin_for_other_pathologies",
]
