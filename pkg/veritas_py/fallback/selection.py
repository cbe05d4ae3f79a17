"""
Atlas entries and gestational-age atlas selection.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

from ..core.conditions import Condition
from ..core.volumes import GridMeta, ProbabilityVolume, ScalarVolume
from ..utils.constants import (
    BSPLINE_ORDER,
    DAYS_PER_WEEK,
    DELTA_GA_NEUROTYPICAL_WEEKS,
    DELTA_GA_SPINA_BIFIDA_WEEKS,
    GAUSS_SIGMA_MM,
    HEAT_ALPHA,
)
from ..utils.exceptions import ConfigError, EmptySelectionError, ValidationError
from ..utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class AtlasEntry:
    """
    One atlas, already warped to the subject grid.

    Attributes:
        id: Atlas identifier
        ga_days: Gestational age of the atlas in days
        condition: Neurotypical or spina bifida
        image: Warped atlas intensities
        probs: Warped atlas probabilities
        displacement: Warped 3-channel displacement field in mm
    """

    id: str
    ga_days: float
    condition: Condition
    image: ScalarVolume
    probs: ProbabilityVolume
    displacement: ScalarVolume

    def __post_init__(self):
        if self.condition is Condition.OTHER:
            raise ConfigError(f"atlas {self.id!r}: atlases are neurotypical or spina_bifida")
        meta = self.image.meta
        meta.check_same(self.probs.meta, f"atlas {self.id!r} image and probabilities")
        meta.check_same(self.displacement.meta, f"atlas {self.id!r} image and displacement")
        if self.image.channels != 1:
            raise ValidationError(f"atlas {self.id!r}: image must have one channel")
        if self.displacement.channels != 3:
            raise ValidationError(f"atlas {self.id!r}: displacement must have 3 channels")

    @property
    def meta(self) -> GridMeta:
        return self.image.meta

    @property
    def ga_weeks(self) -> float:
        return self.ga_days / DAYS_PER_WEEK


@dataclass(frozen=True)
class FusionParams:
    """
    Heat-kernel fusion parameters.

    Attributes:
        alpha: Weight of the local SSD in the morphological distance
        bspline_order: Order of the SSD smoothing kernel (cubic only)
        bspline_spacing_vox: B-spline knot spacing in voxels
        gauss_sigma_mm: Gaussian removing the low frequencies of the displacement
        delta_ga_neurotypical: Selection half-window in weeks
        delta_ga_spina_bifida: Selection half-window in weeks, also used for other conditions
    """

    alpha: float = HEAT_ALPHA
    bspline_order: int = BSPLINE_ORDER
    bspline_spacing_vox: int = 1
    gauss_sigma_mm: float = GAUSS_SIGMA_MM
    delta_ga_neurotypical: float = DELTA_GA_NEUROTYPICAL_WEEKS
    delta_ga_spina_bifida: float = DELTA_GA_SPINA_BIFIDA_WEEKS

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.bspline_order != 3:
            raise ValidationError("only cubic B-spline smoothing is supported")
        if self.bspline_spacing_vox < 1:
            raise ValidationError("B-spline knot spacing must be >= 1 voxel")
        if not self.gauss_sigma_mm > 0:
            raise ValidationError(f"Gaussian sigma must be > 0, got {self.gauss_sigma_mm}")
        if self.delta_ga_neurotypical < 0 or self.delta_ga_spina_bifida < 0:
            raise ValidationError("GA windows must be >= 0")

    def delta_ga(self, condition: Condition) -> float:
        if condition is Condition.NEUROTYPICAL:
            return self.delta_ga_neurotypical
        return self.delta_ga_spina_bifida


def round_ga_weeks(ga_weeks: float) -> int:
    """Nearest whole week, halves rounded up."""
    if not math.isfinite(ga_weeks):
        raise ValidationError(f"gestational age must be finite, got {ga_weeks}")
    return int(math.floor(ga_weeks + 0.5))


def select_atlases(
    entries: Sequence[AtlasEntry],
    ga_weeks: float,
    condition: Condition,
    params: Optional[FusionParams] = None,
) -> List[AtlasEntry]:
    """
    Atlases of the subject's condition within [GA - ΔGA, GA + ΔGA].

    For conditions other than neurotypical and spina bifida every atlas is
    a candidate and the spina bifida window applies.

    Args:
        entries: Candidate atlases
        ga_weeks: Subject gestational age in weeks, rounded to the closest week
        condition: Subject condition
        params: Window sizes

    Returns:
        Selected atlases in input order
    """
    params = params or FusionParams()
    ga = round_ga_weeks(ga_weeks)
    delta = params.delta_ga(condition)
    selected = [
        e
        for e in entries
        if (condition is Condition.OTHER or e.condition is condition)
        and abs(e.ga_weeks - ga) <= delta + 1e-9
    ]
    if not selected:
        raise EmptySelectionError(
            f"no {condition.value} atlas within {delta:g} weeks of GA {ga} (from {len(entries)} candidates)"
        )
    logger.info(f"Selected {len(selected)}/{len(entries)} atlases for GA {ga} weeks ({condition.value})")
    return selected
