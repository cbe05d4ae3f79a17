"""
Trustworthy fusion of backbone AI and fallback predictions.
"""

from .trustworthy import (
    FusionConfig,
    trustworthy_fuse,
    failsafe_map,
    incident_fraction,
    brain_mask_from_fallback,
)

__all__ = [
    "FusionConfig",
    "trustworthy_fuse",
    "failsafe_map",
    "incident_fraction",
    "brain_mask_from_fallback",
]
