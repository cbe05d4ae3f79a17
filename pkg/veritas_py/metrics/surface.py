"""
Surface distances.

A surface voxel is a foreground voxel with at least one 6-connected
background neighbour; voxels outside the grid count as background.
Percentiles use linear interpolation between closest ranks.
"""

import numpy as np
from scipy import ndimage

from ..core.volumes import MaskVolume
from ..utils.constants import HD_PERCENTILE
from ..utils.exceptions import EmptyMaskError
from ..utils.helpers import percentile

_SIX_CONNECTED = ndimage.generate_binary_structure(3, 1)


def surface_voxels(mask: np.ndarray) -> np.ndarray:
    """Boolean array of surface voxels of a 3D mask."""
    mask = np.asarray(mask, dtype=bool)
    eroded = ndimage.binary_erosion(mask, structure=_SIX_CONNECTED, border_value=0)
    return mask & ~eroded


def surface_distances(a: MaskVolume, b: MaskVolume) -> np.ndarray:
    """Distance in mm from every surface voxel of a to the nearest surface voxel of b."""
    a.meta.check_same(b.meta, "surface distance inputs")
    if a.is_empty or b.is_empty:
        raise EmptyMaskError("surface distances need non-empty masks")
    surf_a = surface_voxels(a.data)
    surf_b = surface_voxels(b.data)
    to_b = ndimage.distance_transform_edt(~surf_b, sampling=a.meta.spacing)
    return to_b[surf_a]


def directed_hd95(a: MaskVolume, b: MaskVolume, q: float = HD_PERCENTILE) -> float:
    """q-th percentile of the surface distances from a to b."""
    return percentile(surface_distances(a, b), q)


def hd95(a: MaskVolume, b: MaskVolume, q: float = HD_PERCENTILE) -> float:
    """
    95% Hausdorff distance in mm.

    Per-direction percentiles, then the maximum of the two.
    """
    return max(directed_hd95(a, b, q), directed_hd95(b, a, q))


def hd95_fn(pred: MaskVolume, gt: MaskVolume) -> float:
    """
    Margin distance: HD95 between pred and pred ∪ gt.

    Only false negatives of pred contribute; 0 when pred covers gt.
    """
    if pred.is_empty:
        raise EmptyMaskError("margin distance needs a non-empty prediction")
    return hd95(pred, pred.union(gt))
