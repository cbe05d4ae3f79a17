"""
Veritas Python Library

Trustworthy fetal brain MRI segmentation: Dempster-Shafer fusion of a
backbone AI with an atlas-based fallback under anatomical and intensity
contracts, plus label-set losses, hardness-weighted DRO sampling and
spatio-temporal atlas construction.
"""

from .pipeline import TrustworthySegmenter, SegmentationResult
from .contracts.config import ContractConfig
from .core.labels import LabelSpace
from .core.io import read_volume, write_volume
from .dempster.bpa import Bpa
from .dempster.rules import combine

__version__ = "1.0.0"
__author__ = "Veritas Python"

__all__ = [
    "TrustworthySegmenter",
    "SegmentationResult",
    "ContractConfig",
    "LabelSpace",
    "read_volume",
    "write_volume",
    "Bpa",
    "combine",
]
