"""
Contracts of trust: anatomical and intensity BPAs.
"""

from .distance import distance_transform
from .anatomical import (
    ThresholdKind,
    ThresholdingFn,
    AnatomicalWeights,
    anatomical_weight,
    build_anatomical,
    per_class_bpas,
    anatomical_mass,
    anatomical_bpa,
    apply_anatomical,
    reweight_anatomical,
)
from .intensity import (
    Gmm2,
    GmmFitter,
    fit_gmm2,
    fit_gmm2_volume,
    intensity_log_ratio,
    intensity_bpa,
    apply_intensity,
    boost_intensity,
)
from .config import ContractConfig

__all__ = [
    "distance_transform",
    "ThresholdKind",
    "ThresholdingFn",
    "AnatomicalWeights",
    "anatomical_weight",
    "build_anatomical",
    "per_class_bpas",
    "anatomical_mass",
    "anatomical_bpa",
    "apply_anatomical",
    "reweight_anatomical",
    "Gmm2",
    "GmmFitter",
    "fit_gmm2",
    "fit_gmm2_volume",
    "intensity_log_ratio",
    "intensity_bpa",
    "apply_intensity",
    "boost_intensity",
    "ContractConfig",
]
