"""
Gaussian temporal weights over gestational age.
"""

import numpy as np

from ..utils.constants import TEMPORAL_SIGMA_DAYS
from ..utils.exceptions import ValidationError


def temporal_weight(ga_i, ga_target: float, sigma_days: float = TEMPORAL_SIGMA_DAYS, cutoff: bool = False):
    """
    Gaussian density of GA_i - GA_target, in days.

    Args:
        ga_i: Gestational age(s) of the samples in days
        ga_target: Target gestational age in days
        sigma_days: Standard deviation in days
        cutoff: Zero the weight beyond 3σ (landmark weighting)

    Returns:
        Weight(s) >= 0, a float for scalar input
    """
    if not sigma_days > 0:
        raise ValidationError(f"sigma must be > 0, got {sigma_days}")
    delta = np.asarray(ga_i, dtype=np.float64) - float(ga_target)
    w = np.exp(-0.5 * (delta / sigma_days) ** 2) / (np.sqrt(2.0 * np.pi) * sigma_days)
    if cutoff:
        w = np.where(np.abs(delta) > 3.0 * sigma_days, 0.0, w)
    return float(w) if w.ndim == 0 else w
