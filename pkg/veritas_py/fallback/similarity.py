"""
Morphological similarity between the subject and a warped atlas.

D = α·SSD_local + (1 - α)·‖φ - G_σ * φ‖, where SSD_local is the squared
intensity difference smoothed by a cubic B-spline kernel and the second
term is the high-frequency part of the displacement field.
"""

from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from ..core.volumes import MaskVolume, ScalarVolume
from ..utils.constants import GAUSS_TRUNCATE
from ..utils.exceptions import DegenerateDataError, EmptyMaskError, ValidationError
from .selection import AtlasEntry, FusionParams


def cubic_bspline(t) -> np.ndarray:
    """Centred cubic B-spline, support (-2, 2)."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    inner = 2.0 / 3.0 - t ** 2 + 0.5 * t ** 3
    outer = (2.0 - t) ** 3 / 6.0
    return np.where(t < 1.0, inner, np.where(t < 2.0, outer, 0.0))


def cubic_bspline_kernel(knot_spacing: int = 1) -> np.ndarray:
    """Cubic B-spline sampled on the voxel grid, truncated to its support and summing to 1."""
    if knot_spacing < 1:
        raise ValidationError("knot spacing must be >= 1 voxel")
    offsets = np.arange(-2 * knot_spacing + 1, 2 * knot_spacing)
    kernel = cubic_bspline(offsets / knot_spacing)
    return kernel / kernel.sum()


def gaussian_kernel(sigma_vox: float, truncate: float = GAUSS_TRUNCATE) -> np.ndarray:
    """Sampled Gaussian truncated at ±truncate·σ, summing to 1."""
    if not sigma_vox > 0:
        raise ValidationError(f"sigma must be > 0, got {sigma_vox}")
    radius = int(truncate * sigma_vox + 0.5)
    offsets = np.arange(-radius, radius + 1)
    kernel = np.exp(-0.5 * (offsets / sigma_vox) ** 2)
    return kernel / kernel.sum()


def separable_smooth(data: np.ndarray, kernels: Sequence[np.ndarray]) -> np.ndarray:
    """Apply one 1D kernel per spatial axis with reflect padding."""
    out = np.asarray(data, dtype=np.float64)
    for axis, kernel in enumerate(kernels):
        out = ndimage.correlate1d(out, kernel, axis=axis, mode="reflect")
    return out


def normalize_intensity(image: ScalarVolume, mask: Optional[MaskVolume] = None) -> ScalarVolume:
    """Zero mean, unit variance inside `mask` (the whole grid when None)."""
    values = image.data
    if mask is not None:
        image.meta.check_same(mask.meta, "image and mask")
        if mask.is_empty:
            raise EmptyMaskError("cannot normalise intensities in an empty mask")
        values = image.data[mask.data]
    mean = float(values.mean())
    std = float(values.std())
    if std == 0.0:
        raise DegenerateDataError("image is constant inside the mask; cannot normalise")
    return ScalarVolume(image.meta, (image.data - mean) / std)


def local_ssd(
    subject: ScalarVolume,
    atlas_img: ScalarVolume,
    mask: Optional[MaskVolume] = None,
    knot_spacing: int = 1,
    normalize: bool = True,
) -> ScalarVolume:
    """
    B³ * (I_subject - I_atlas)².

    Args:
        subject: Subject image
        atlas_img: Warped atlas image
        mask: Normalisation domain
        knot_spacing: B-spline knot spacing in voxels
        normalize: Normalise each image to zero mean and unit variance first
    """
    subject.meta.check_same(atlas_img.meta, "subject and atlas images")
    if normalize:
        subject = normalize_intensity(subject, mask)
        atlas_img = normalize_intensity(atlas_img, mask)
    kernel = cubic_bspline_kernel(knot_spacing)
    squared = (subject.data - atlas_img.data) ** 2
    return ScalarVolume(subject.meta, separable_smooth(squared, [kernel] * 3))


def high_freq_disp_norm(disp: ScalarVolume, sigma_mm: float) -> ScalarVolume:
    """Per-voxel Euclidean norm (mm) of φ - G_σ * φ."""
    if disp.channels != 3:
        raise ValidationError(f"displacement field needs 3 channels, got {disp.channels}")
    kernels = [gaussian_kernel(sigma_mm / s) for s in disp.meta.spacing]
    residual = np.empty(disp.data.shape)
    for c in range(3):
        channel = disp.data[..., c]
        residual[..., c] = channel - separable_smooth(channel, kernels)
    return ScalarVolume(disp.meta, np.sqrt((residual ** 2).sum(axis=3)))


def heat_weight(d) -> np.ndarray:
    """w = exp(-D²)."""
    d = np.asarray(d, dtype=np.float64)
    if np.any(d < 0):
        raise ValidationError("morphological distance must be >= 0")
    return np.exp(-(d ** 2))


def morphological_distance(
    subject: ScalarVolume,
    entry: AtlasEntry,
    params: FusionParams,
    mask: Optional[MaskVolume] = None,
) -> ScalarVolume:
    """D = α·local_ssd + (1 - α)·high_freq_disp_norm for one atlas."""
    subject.meta.check_same(entry.meta, f"subject and atlas {entry.id!r}")
    ssd = local_ssd(subject, entry.image, mask, params.bspline_spacing_vox)
    hf = high_freq_disp_norm(entry.displacement, params.gauss_sigma_mm)
    return ScalarVolume(subject.meta, params.alpha * ssd.data + (1.0 - params.alpha) * hf.data)
