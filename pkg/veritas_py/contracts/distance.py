"""
Exact Euclidean distance to a mask, in millimetres.
"""

from scipy import ndimage

from ..core.volumes import MaskVolume, ScalarVolume
from ..utils.exceptions import EmptyMaskError


def distance_transform(mask: MaskVolume) -> ScalarVolume:
    """
    Distance in mm from every voxel to the nearest voxel of the mask.

    Exact separable Euclidean transform with the anisotropic spacing folded
    in; 0 inside the mask.
    """
    if mask.is_empty:
        raise EmptyMaskError("distance transform of an empty mask")
    dist = ndimage.distance_transform_edt(~mask.data, sampling=mask.meta.spacing)
    return ScalarVolume(mask.meta, dist)
