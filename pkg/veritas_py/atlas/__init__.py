"""
Atlas construction: temporal weighting, symmetric averaging, Procrustes alignment.
"""

from .temporal import temporal_weight
from .averaging import rescale_intensity, weighted_average
from .procrustes import (
    LandmarkConfig,
    ProcrustesSolution,
    ProcrustesSolver,
    landmark_weights,
    procrustes_objective,
    procrustes_solve,
)
from .landmarks import read_landmark_csv, write_solution_json

__all__ = [
    "temporal_weight",
    "rescale_intensity",
    "weighted_average",
    "LandmarkConfig",
    "ProcrustesSolution",
    "ProcrustesSolver",
    "landmark_weights",
    "procrustes_objective",
    "procrustes_solve",
    "read_landmark_csv",
    "write_solution_json",
]
