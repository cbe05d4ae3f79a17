"""
Symmetrised, temporally weighted intensity averaging.
"""

from typing import Optional, Sequence

import numpy as np

from ..core.volumes import MaskVolume, ScalarVolume
from ..utils.constants import ATLAS_INTENSITY_MEAN, ATLAS_INTENSITY_STD, TEMPORAL_SIGMA_DAYS
from ..utils.exceptions import DegenerateDataError, EmptyMaskError, ValidationError
from ..utils.logger import get_logger
from .temporal import temporal_weight

logger = get_logger(__name__)


def rescale_intensity(
    image: ScalarVolume,
    mask: Optional[MaskVolume] = None,
    mean: float = ATLAS_INTENSITY_MEAN,
    std: float = ATLAS_INTENSITY_STD,
) -> ScalarVolume:
    """Affine intensity map giving `mean` and `std` inside the mask."""
    values = image.data
    if mask is not None:
        image.meta.check_same(mask.meta, "image and mask")
        if mask.is_empty:
            raise EmptyMaskError("cannot rescale intensities in an empty mask")
        values = image.data[mask.data]
    current_std = float(values.std())
    if current_std == 0.0:
        raise DegenerateDataError("image is constant inside the mask; cannot rescale")
    return ScalarVolume(image.meta, (image.data - float(values.mean())) / current_std * std + mean)


def weighted_average(
    volumes: Sequence[ScalarVolume],
    ga_list: Sequence[float],
    ga_target: float,
    flip_axis: int = 0,
    masks: Optional[Sequence[MaskVolume]] = None,
    sigma_days: float = TEMPORAL_SIGMA_DAYS,
    rescale: bool = True,
) -> ScalarVolume:
    """
    Mirror-symmetric weighted mean of aligned volumes.

    A = Σ w_i I_i / Σ w_i with Gaussian temporal weights, returned as
    (A + mirror(A)) / 2 so the output is exactly symmetric.

    Args:
        volumes: Aligned subject volumes
        ga_list: Gestational ages in days, one per volume
        ga_target: Target gestational age in days
        flip_axis: Grid axis mirrored about its centre
        masks: Optional brain masks for the intensity rescaling
        sigma_days: Temporal standard deviation
        rescale: Rescale each volume to mean 2000 / std 500 first

    Returns:
        Average volume
    """
    if not volumes:
        raise ValidationError("weighted_average needs at least one volume")
    if len(ga_list) != len(volumes):
        raise ValidationError(f"{len(volumes)} volumes but {len(ga_list)} gestational ages")
    if masks is not None and len(masks) != len(volumes):
        raise ValidationError(f"{len(volumes)} volumes but {len(masks)} masks")
    if flip_axis not in (0, 1, 2):
        raise ValidationError(f"flip axis must be 0, 1 or 2, got {flip_axis}")
    meta = volumes[0].meta
    for v in volumes[1:]:
        meta.check_same(v.meta, "atlas volumes")

    weights = np.atleast_1d(temporal_weight(ga_list, ga_target, sigma_days))
    total = float(weights.sum())
    if total <= 0.0:
        raise DegenerateDataError(f"all temporal weights vanish for GA target {ga_target} days")

    accum = np.zeros(meta.dims)
    for i, (w, vol) in enumerate(zip(weights, volumes)):
        if vol.channels != 1:
            raise ValidationError("atlas volumes must have one channel")
        if rescale:
            vol = rescale_intensity(vol, masks[i] if masks is not None else None)
        accum += w * vol.data
    average = accum / total
    symmetric = 0.5 * (average + np.flip(average, axis=flip_axis))
    logger.info(f"Averaged {len(volumes)} volumes at GA {ga_target:g} days (weight sum {total:.4g})")
    return ScalarVolume(meta, symmetric)
