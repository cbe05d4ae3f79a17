"""
Trustworthy segmentation pipeline.

Orchestrates the contracts and the fusion for one subject: builds the
anatomical weights from the fallback, fits (or loads) the intensity GMM,
fuses the backbone AI with the fallback and computes the conflict map.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .contracts.anatomical import AnatomicalWeights, build_anatomical
from .contracts.config import ContractConfig
from .contracts.intensity import Gmm2, fit_gmm2_volume
from .core.conditions import Condition
from .core.volumes import MaskVolume, ProbabilityVolume, ScalarVolume, argmax_labels, class_masks
from .fusion.trustworthy import (
    FusionConfig,
    brain_mask_from_fallback,
    failsafe_map,
    incident_fraction,
    trustworthy_fuse,
)
from .utils.constants import DEFAULT_INCIDENT_THRESHOLD
from .utils.exceptions import LabelSpaceError
from .utils.helpers import resolve_threads
from .utils.logger import get_logger


@dataclass
class SegmentationResult:
    """
    Output of one trustworthy segmentation.

    Attributes:
        fused: Trustworthy probabilities
        conflict: Fail-safe conflict map
        weights: Anatomical weights used
        gmm: Intensity model used
        brain_mask: Fallback brain mask
        incident_fraction: Fraction of brain voxels with conflict >= threshold
    """

    fused: ProbabilityVolume
    conflict: ScalarVolume
    weights: AnatomicalWeights
    gmm: Gmm2
    brain_mask: MaskVolume
    incident_fraction: float


class TrustworthySegmenter:
    """
    Main entry point for trustworthy fusion.

    Example:
        segmenter = TrustworthySegmenter.from_config_file("contracts.json")
        result = segmenter.segment(p_ai, p_fallback, image)
    """

    def __init__(self, config: ContractConfig, threads: Optional[int] = None,
                 incident_threshold: float = DEFAULT_INCIDENT_THRESHOLD):
        """
        Initialize the segmenter.

        Args:
            config: Contract configuration
            threads: Thread cap (VERITAS_THREADS or CPU count when None)
            incident_threshold: Conflict level counted as an incident
        """
        self.logger = get_logger(__name__)
        self.config = config
        self.threads = resolve_threads(threads)
        self.incident_threshold = incident_threshold

    @classmethod
    def from_config_file(cls, path: Union[str, Path], condition: Optional[Condition] = None,
                         **kwargs) -> "TrustworthySegmenter":
        return cls(ContractConfig.load(path, condition), **kwargs)

    def anatomical_weights(self, p_fb: ProbabilityVolume) -> AnatomicalWeights:
        """Contracts from the fallback's hard segmentation and the configured margins."""
        if p_fb.K != self.config.space.K:
            raise LabelSpaceError(f"fallback has K={p_fb.K}, contract config has K={self.config.space.K}")
        masks = class_masks(argmax_labels(p_fb), self.config.space)
        return build_anatomical(masks, self.config.margins, self.config.phi, self.config.space, self.threads)

    def segment(
        self,
        p_ai: ProbabilityVolume,
        p_fb: ProbabilityVolume,
        image: ScalarVolume,
        epsilon: Optional[float] = None,
    ) -> SegmentationResult:
        """
        Run the trustworthy fusion for one subject.

        Args:
            p_ai: Backbone AI probabilities
            p_fb: Fallback probabilities
            image: Subject image
            epsilon: Overrides the configured blending weight

        Returns:
            SegmentationResult
        """
        try:
            self.logger.info("Building anatomical contracts from the fallback segmentation")
            p_ai.meta.check_same(p_fb.meta, "AI and fallback probabilities")
            p_ai.meta.check_same(image.meta, "probabilities and image")
            weights = self.anatomical_weights(p_fb)

            fusion_cfg = FusionConfig.from_contracts(self.config, epsilon)
            brain = brain_mask_from_fallback(p_fb, fusion_cfg.background)
            gmm = fusion_cfg.gmm
            if gmm is None:
                self.logger.info(f"Fitting intensity GMM in a brain mask of {brain.count} voxels")
                gmm = fit_gmm2_volume(image, brain)
                fusion_cfg.gmm = gmm

            fused = trustworthy_fuse(p_ai, p_fb, weights, image, fusion_cfg, brain, self.threads)
            conflict = failsafe_map(p_ai, weights)
            fraction = incident_fraction(conflict, self.incident_threshold, brain)
            self.logger.info(f"Incident fraction {fraction:.4f} at threshold {self.incident_threshold:g}")
            return SegmentationResult(fused, conflict, weights, gmm, brain, fraction)
        except Exception as e:
            self.logger.error(f"Trustworthy segmentation failed: {e}")
            raise
