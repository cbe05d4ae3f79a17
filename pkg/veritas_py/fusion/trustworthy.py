"""
Trustworthy fusion.

    p_twai = ((1 - ε) p_ai + ε p_fallback) ⊕ m_anatomy ⊕ m_intensity

evaluated voxel-wise with the O(K) closed forms of the contract module,
plus the fail-safe conflict map 1 - Σ_c p_ai(c) w_c.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..contracts.anatomical import AnatomicalWeights, ThresholdKind, reweight_anatomical
from ..contracts.config import ContractConfig
from ..contracts.intensity import Gmm2, boost_intensity, fit_gmm2_volume, intensity_log_ratio
from ..core.labels import SubsetMask
from ..core.volumes import MaskVolume, ProbabilityVolume, ScalarVolume
from ..utils.constants import DEFAULT_EPSILON, DEFAULT_INCIDENT_THRESHOLD
from ..utils.exceptions import FallbackContradictionError, LabelSpaceError, ValidationError
from ..utils.helpers import parallel_map, resolve_threads
from ..utils.logger import get_logger

logger = get_logger(__name__)

CHUNK_VOXELS = 1 << 16


@dataclass
class FusionConfig:
    """
    Fusion settings.

    Attributes:
        c_high: Classes boosted by the bright intensity component
        epsilon: Fallback blending weight, 0 < ε < 1
        phi: Margin shape used to build the anatomical weights
        margins: Per-class margins in mm
        gmm: Pre-fit mixture; None fits one on the image at fuse time
        background: Class index left out of the brain mask
    """

    c_high: SubsetMask
    epsilon: float = DEFAULT_EPSILON
    phi: ThresholdKind = ThresholdKind.HARD
    margins: Dict[str, float] = field(default_factory=dict)
    gmm: Optional[Gmm2] = None
    background: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValidationError(f"epsilon must be in (0, 1), got {self.epsilon}")

    @classmethod
    def from_contracts(cls, config: ContractConfig, epsilon: Optional[float] = None) -> "FusionConfig":
        return cls(
            c_high=config.c_high,
            epsilon=config.epsilon if epsilon is None else epsilon,
            phi=config.phi,
            margins=dict(config.margins),
            gmm=config.gmm,
            background=config.background_index,
        )


def brain_mask_from_fallback(p_fb: ProbabilityVolume, background: int = 0) -> MaskVolume:
    """Voxels whose fallback argmax is not the background class."""
    if not 0 <= background < p_fb.K:
        raise LabelSpaceError(f"background index {background} out of range for K={p_fb.K}")
    return MaskVolume(p_fb.meta, np.argmax(p_fb.data, axis=3) != background)


def _check_inputs(p_ai: ProbabilityVolume, p_fb: ProbabilityVolume, aw: AnatomicalWeights):
    p_ai.meta.check_same(p_fb.meta, "AI and fallback probabilities")
    p_ai.meta.check_same(aw.meta, "AI probabilities and anatomical weights")
    if p_ai.K != p_fb.K or p_ai.K != aw.space.K:
        raise LabelSpaceError(f"class count mismatch: AI K={p_ai.K}, fallback K={p_fb.K}, contracts K={aw.space.K}")


def trustworthy_fuse(
    p_ai: ProbabilityVolume,
    p_fb: ProbabilityVolume,
    aw: AnatomicalWeights,
    image: ScalarVolume,
    cfg: FusionConfig,
    brain_mask: Optional[MaskVolume] = None,
    threads: Optional[int] = None,
) -> ProbabilityVolume:
    """
    Fuse the backbone AI and fallback probabilities under the contracts.

    Args:
        p_ai: Backbone AI probabilities
        p_fb: Fallback probabilities
        aw: Anatomical weights
        image: Subject image (intensity contract)
        cfg: Fusion settings
        brain_mask: GMM fitting domain; defaults to the fallback brain mask
        threads: Thread cap for chunked evaluation

    Returns:
        Trustworthy probabilities
    """
    _check_inputs(p_ai, p_fb, aw)
    p_ai.meta.check_same(image.meta, "probabilities and image")
    if image.channels != 1:
        raise ValidationError("the subject image must have a single channel")

    fb_support = (p_fb.data * aw.data).sum(axis=3)
    if np.any(fb_support <= 0):
        bad = int(np.count_nonzero(fb_support <= 0))
        raise FallbackContradictionError(
            f"fallback probabilities completely contradict the anatomical contracts at {bad} voxels"
        )

    gmm = cfg.gmm
    if gmm is None:
        mask = brain_mask if brain_mask is not None else brain_mask_from_fallback(p_fb, cfg.background)
        gmm = fit_gmm2_volume(image, mask)

    K = p_ai.K
    high = np.array([c in cfg.c_high for c in range(K)])
    flat_ai = p_ai.data.reshape(-1, K)
    flat_fb = p_fb.data.reshape(-1, K)
    flat_w = aw.data.reshape(-1, K)
    flat_img = image.data.reshape(-1)
    eps = cfg.epsilon

    def fuse_chunk(start: int) -> np.ndarray:
        stop = min(start + CHUNK_VOXELS, flat_img.size)
        blend = (1.0 - eps) * flat_ai[start:stop] + eps * flat_fb[start:stop]
        anatomical, _ = reweight_anatomical(blend, flat_w[start:stop])
        return boost_intensity(anatomical, intensity_log_ratio(flat_img[start:stop], gmm), high)

    threads = resolve_threads(threads)
    chunks = parallel_map(fuse_chunk, range(0, flat_img.size, CHUNK_VOXELS), threads)
    fused = np.concatenate(chunks, axis=0).reshape(p_ai.data.shape)
    logger.info(f"Fused {flat_img.size} voxels (K={K}, epsilon={eps:g}, threads={threads})")
    return ProbabilityVolume(p_ai.meta, fused)


def failsafe_map(p_ai: ProbabilityVolume, aw: AnatomicalWeights) -> ScalarVolume:
    """Per-voxel conflict 1 - Σ_c p_ai(c) w_c in [0, 1]; 1 means complete contradiction."""
    p_ai.meta.check_same(aw.meta, "AI probabilities and anatomical weights")
    if p_ai.K != aw.space.K:
        raise LabelSpaceError(f"class count mismatch: AI K={p_ai.K}, contracts K={aw.space.K}")
    conflict = 1.0 - (p_ai.data * aw.data).sum(axis=3)
    return ScalarVolume(p_ai.meta, np.clip(conflict, 0.0, 1.0))


def incident_fraction(
    conflict: ScalarVolume,
    tau: float = DEFAULT_INCIDENT_THRESHOLD,
    mask: Optional[MaskVolume] = None,
) -> float:
    """
    Fraction of voxels (inside `mask` when given) with conflict >= tau.

    An empty mask gives 0.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValidationError(f"incident threshold must be in [0, 1], got {tau}")
    values = conflict.data
    if mask is not None:
        conflict.meta.check_same(mask.meta, "conflict map and mask")
        values = values[mask.data]
    if values.size == 0:
        return 0.0
    return float(np.count_nonzero(values >= tau)) / values.size
