"""
Heat-kernel multi-atlas fusion.

    S(x) = Σ_k w_k(x) S_k(x) / Σ_k w_k(x),   w_k = exp(-D_k²)

The atlases arrive already warped to the subject grid; registration is
done by external tooling.
"""

from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.special import softmax

from ..core.conditions import Condition
from ..core.io import read_volume
from ..core.volumes import MaskVolume, ProbabilityVolume, ScalarVolume
from ..utils.config import load_json, require_keys
from ..utils.exceptions import ConfigError, EmptySelectionError, ValidationError
from ..utils.helpers import parallel_map, resolve_threads
from ..utils.logger import get_logger
from .selection import AtlasEntry, FusionParams
from .similarity import morphological_distance

logger = get_logger(__name__)


def fuse_with_distances(probs: Sequence[ProbabilityVolume], distances: Sequence[np.ndarray]) -> ProbabilityVolume:
    """
    Heat-kernel reduction for given per-atlas distance maps.

    Weights are normalised as a softmax of -D² over atlases, which equals
    exp(-D²)/Σ exp(-D²) without underflow in the denominator.
    """
    if not probs:
        raise EmptySelectionError("heat-kernel fusion needs at least one atlas")
    if len(probs) != len(distances):
        raise ValidationError(f"{len(probs)} probability maps but {len(distances)} distance maps")
    meta = probs[0].meta
    for p in probs[1:]:
        meta.check_same(p.meta, "atlas probabilities")
        if p.K != probs[0].K:
            raise ValidationError("atlas probability maps disagree on the number of classes")
    d = np.stack([np.asarray(x, dtype=np.float64) for x in distances], axis=0)
    if d.shape[1:] != meta.dims:
        raise ValidationError(f"distance maps of shape {d.shape[1:]} do not match grid {meta.dims}")
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise ValidationError("morphological distances must be finite and >= 0")

    weights = softmax(-(d ** 2), axis=0)
    fused = np.zeros(probs[0].data.shape)
    for w, p in zip(weights, probs):
        fused += w[..., None] * p.data
    return ProbabilityVolume(meta, fused)


def fuse_atlases(
    entries: Sequence[AtlasEntry],
    subject: ScalarVolume,
    params: Optional[FusionParams] = None,
    mask: Optional[MaskVolume] = None,
    threads: Optional[int] = None,
) -> ProbabilityVolume:
    """
    Fallback probabilities from warped atlases.

    Args:
        entries: Selected atlases
        subject: Subject image
        params: Fusion parameters
        mask: Intensity normalisation domain (brain mask)
        threads: Thread cap for the per-atlas distance maps

    Returns:
        Fallback probability volume
    """
    if not entries:
        raise EmptySelectionError("heat-kernel fusion needs at least one atlas")
    params = params or FusionParams()
    for e in entries:
        subject.meta.check_same(e.meta, f"subject and atlas {e.id!r}")

    def distance(entry: AtlasEntry) -> np.ndarray:
        d = morphological_distance(subject, entry, params, mask).data
        logger.debug(f"Atlas {entry.id}: mean D {float(d.mean()):.4g}")
        return d

    distances = parallel_map(distance, list(entries), resolve_threads(threads))
    fused = fuse_with_distances([e.probs for e in entries], distances)
    logger.info(f"Fused {len(entries)} atlases into the fallback map")
    return fused


def load_atlas_manifest(path: Union[str, Path]) -> List[AtlasEntry]:
    """
    Load atlases listed in a manifest.

    The manifest is a JSON list of
    {"id", "ga_days", "condition", "image", "probs", "displacement"};
    volume paths are relative to the manifest.
    """
    path = Path(path)
    manifest = load_json(path)
    if not isinstance(manifest, list):
        raise ConfigError(f"atlas manifest {path}: expected a JSON list")
    entries = []
    for i, item in enumerate(manifest):
        require_keys(item, ["id", "ga_days", "condition", "image", "probs", "displacement"], f"atlas manifest entry {i}")
        try:
            image = read_volume(path.parent / item["image"])
            probs = read_volume(path.parent / item["probs"])
            displacement = read_volume(path.parent / item["displacement"])
        except Exception as e:
            logger.error(f"Loading atlas {item['id']!r} failed: {e}")
            raise
        if not isinstance(image, ScalarVolume) or not isinstance(displacement, ScalarVolume):
            raise ConfigError(f"atlas {item['id']!r}: image and displacement must be scalar volumes")
        if not isinstance(probs, ProbabilityVolume):
            raise ConfigError(f"atlas {item['id']!r}: probs must be a probability volume")
        entries.append(
            AtlasEntry(
                id=str(item["id"]),
                ga_days=float(item["ga_days"]),
                condition=Condition.parse(item["condition"]),
                image=image,
                probs=probs,
                displacement=displacement,
            )
        )
    logger.info(f"Loaded {len(entries)} atlases from {path}")
    return entries
