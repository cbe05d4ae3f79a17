"""
Subject conditions driving margin and atlas selection.
"""

from enum import Enum

from ..utils.exceptions import ConfigError


class Condition(Enum):
    """Condition of the fetus being segmented."""

    NEUROTYPICAL = "neurotypical"
    SPINA_BIFIDA = "spina_bifida"
    OTHER = "other"

    @classmethod
    def parse(cls, value: str) -> "Condition":
        key = value.strip().lower().replace("-", "_").replace(" ", "_")
        for member in cls:
            if member.value == key:
                return member
        raise ConfigError(f"unknown condition {value!r}; expected one of {[m.value for m in cls]}")
