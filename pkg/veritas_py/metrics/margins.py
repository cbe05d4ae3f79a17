"""
Margin tables and margin tuning for the anatomical contracts.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Tuple

from ..core.conditions import Condition
from ..core.volumes import MaskVolume
from ..utils.config import load_json, require_keys, save_json
from ..utils.constants import MARGIN_PERCENTILE
from ..utils.exceptions import ConfigError, ValidationError
from ..utils.helpers import percentile
from ..utils.logger import get_logger
from .surface import hd95_fn

logger = get_logger(__name__)


@dataclass
class MarginTable:
    """
    Margins eta (mm) per (class, condition).

    Only neurotypical and spina bifida entries are stored; "other"
    conditions are derived with `margin_for_other_pathologies`.
    """

    entries: Dict[Tuple[str, Condition], float] = field(default_factory=dict)

    def __post_init__(self):
        for key, eta in self.entries.items():
            self._check(key, eta)

    @staticmethod
    def _check(key, eta: float):
        if not eta >= 0:
            raise ValidationError(f"margin for {key} must be >= 0, got {eta}")

    def set(self, class_name: str, condition: Condition, eta: float):
        self._check((class_name, condition), eta)
        self.entries[(class_name, condition)] = float(eta)

    def get(self, class_name: str, condition: Condition) -> float:
        if condition is Condition.OTHER:
            return margin_for_other_pathologies(self, class_name)
        try:
            return self.entries[(class_name, condition)]
        except KeyError:
            raise ConfigError(f"no margin for class {class_name!r} and condition {condition.value}") from None

    @property
    def class_names(self) -> list:
        return sorted({c for c, _ in self.entries})

    def margins_for(self, condition: Condition) -> Dict[str, float]:
        """Per-class margins for one condition."""
        return {c: self.get(c, condition) for c in self.class_names}

    def to_json(self) -> dict:
        table: Dict[str, Dict[str, float]] = {}
        for (c, cond), eta in sorted(self.entries.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
            table.setdefault(c, {})[cond.value] = eta
        return {"margins_mm": table}

    @classmethod
    def from_json(cls, data: dict) -> "MarginTable":
        require_keys(data, ["margins_mm"], "margin table")
        table = cls()
        for c, per_condition in data["margins_mm"].items():
            if not isinstance(per_condition, dict):
                raise ConfigError(f"margin table: class {c!r} needs a {{condition: eta}} object")
            for cond, eta in per_condition.items():
                table.set(c, Condition.parse(cond), float(eta))
        return table

    @classmethod
    def load(cls, path) -> "MarginTable":
        return cls.from_json(load_json(path))

    def save(self, path):
        save_json(self.to_json(), path)


def tune_margin(pairs: Iterable[Tuple[MaskVolume, MaskVolume]], q: float = MARGIN_PERCENTILE) -> float:
    """
    Margin eta: the 95th percentile of the margin distances over (pred, gt) pairs.

    Args:
        pairs: Fallback prediction and ground-truth masks of one class

    Returns:
        Margin in mm
    """
    values = [hd95_fn(pred, gt) for pred, gt in pairs]
    if not values:
        raise ValidationError("tune_margin needs at least one (pred, gt) pair")
    eta = percentile(values, q)
    logger.debug(f"Tuned margin {eta:.4f} mm over {len(values)} pairs")
    return eta


def margin_for_other_pathologies(table: MarginTable, class_name: str) -> float:
    """max(eta_neurotypical, eta_spina_bifida) for one class."""
    try:
        return max(
            table.entries[(class_name, Condition.NEUROTYPICAL)],
            table.entries[(class_name, Condition.SPINA_BIFIDA)],
        )
    except KeyError:
        raise ConfigError(
            f"class {class_name!r} needs both neurotypical and spina_bifida margins"
        ) from None


def tune_margin_table(cases: Mapping[Tuple[str, Condition], Iterable[Tuple[MaskVolume, MaskVolume]]]) -> MarginTable:
    """Tune one margin per (class, condition) group of pairs."""
    table = MarginTable()
    for (class_name, condition), pairs in cases.items():
        if condition is Condition.OTHER:
            raise ConfigError("margins are tuned for neurotypical and spina_bifida only")
        table.set(class_name, condition, tune_margin(pairs))
        logger.info(f"Margin {class_name}/{condition.value}: {table.entries[(class_name, condition)]:.3f} mm")
    return table
