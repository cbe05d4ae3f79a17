"""
Fallback segmentation by heat-kernel multi-atlas fusion.
"""

from .selection import AtlasEntry, FusionParams, round_ga_weeks, select_atlases
from .similarity import (
    cubic_bspline_kernel,
    gaussian_kernel,
    normalize_intensity,
    local_ssd,
    high_freq_disp_norm,
    heat_weight,
    morphological_distance,
)
from .multi_atlas import fuse_atlases, fuse_with_distances, load_atlas_manifest

__all__ = [
    "AtlasEntry",
    "FusionParams",
    "round_ga_weeks",
    "select_atlases",
    "cubic_bspline_kernel",
    "gaussian_kernel",
    "normalize_intensity",
    "local_ssd",
    "high_freq_disp_norm",
    "heat_weight",
    "morphological_distance",
    "fuse_atlases",
    "fuse_with_distances",
    "load_atlas_manifest",
]
