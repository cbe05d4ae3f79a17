"""
Dempster-Shafer algebra: BPAs, contradiction mass and Dempster's rule.
"""

from .bpa import (
    Bpa,
    ClassProbability,
    from_probability,
    plausibility,
    belief,
    singleton_plausibilities,
    to_probability,
)
from .rules import contradiction_mass, combine, combine_many, combine_prob

__all__ = [
    "Bpa",
    "ClassProbability",
    "from_probability",
    "plausibility",
    "belief",
    "singleton_plausibilities",
    "to_probability",
    "contradiction_mass",
    "combine",
    "combine_many",
    "combine_prob",
]
