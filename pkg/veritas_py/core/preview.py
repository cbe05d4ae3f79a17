"""
PNG previews of volume slices for quick visual checks.
"""

from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image

from ..utils.exceptions import ValidationError
from ..utils.logger import get_logger
from .volumes import MaskVolume, ScalarVolume

logger = get_logger(__name__)


def slice_to_uint8(volume: Union[ScalarVolume, MaskVolume], axis: int = 2, index: Optional[int] = None,
                   vmin: Optional[float] = None, vmax: Optional[float] = None) -> np.ndarray:
    """
    Extract one slice and window it to 0..255.

    Args:
        volume: Single-channel volume
        axis: Axis orthogonal to the slice
        index: Slice index, middle slice when None
        vmin: Lower window bound, slice minimum when None
        vmax: Upper window bound, slice maximum when None

    Returns:
        2D uint8 array, rows along the second remaining axis
    """
    data = np.asarray(volume.data, dtype=np.float64)
    if data.ndim != 3:
        raise ValidationError("preview needs a single-channel volume")
    if not 0 <= axis <= 2:
        raise ValidationError(f"axis must be 0, 1 or 2, got {axis}")
    if index is None:
        index = data.shape[axis] // 2
    plane = np.take(data, index, axis=axis)
    lo = float(plane.min()) if vmin is None else vmin
    hi = float(plane.max()) if vmax is None else vmax
    if hi <= lo:
        scaled = np.zeros_like(plane)
    else:
        scaled = np.clip((plane - lo) / (hi - lo), 0.0, 1.0)
    return np.round(scaled * 255.0).astype(np.uint8).T


def save_slice_png(volume: Union[ScalarVolume, MaskVolume], path: Union[str, Path], axis: int = 2,
                   index: Optional[int] = None, vmin: Optional[float] = None, vmax: Optional[float] = None):
    """Write a grayscale PNG of one slice."""
    pixels = slice_to_uint8(volume, axis=axis, index=index, vmin=vmin, vmax=vmax)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels).save(path)
    logger.info(f"Saved slice preview to {path}")
