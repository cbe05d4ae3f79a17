"""
Contract configuration file.

    {"classes": ["background", "wm", ...],
     "epsilon": 1e-3,
     "phi": "hard" | "exp",
     "margins_mm": {class: eta} | {class: {condition: eta}},
     "condition": "neurotypical",
     "c_high": ["csf", "background"],
     "background": "background",
     "gmm": {"mu_low": ..., "sigma_low": ..., "mu_high": ..., "sigma_high": ...}}

"condition" selects a column when margins_mm is a full margin table.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

from ..core.conditions import Condition
from ..core.labels import LabelSpace, SubsetMask
from ..metrics.margins import MarginTable
from ..utils.config import load_json, require_keys
from ..utils.constants import DEFAULT_EPSILON
from ..utils.exceptions import ConfigError, LabelSpaceError
from .anatomical import ThresholdKind
from .intensity import Gmm2


@dataclass
class ContractConfig:
    """Parsed contract configuration."""

    space: LabelSpace
    margins: Dict[str, float]
    c_high: SubsetMask
    phi: ThresholdKind = ThresholdKind.HARD
    epsilon: float = DEFAULT_EPSILON
    background: Optional[str] = None
    gmm: Optional[Gmm2] = None
    condition: Condition = field(default=Condition.NEUROTYPICAL)

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must be in (0, 1), got {self.epsilon}")
        missing = [n for n in self.space.names if n not in self.margins]
        if missing:
            raise ConfigError(f"margins_mm has no entry for classes {missing}")
        bits = int(self.c_high)
        if bits == 0 or bits == self.space.full_bits:
            raise ConfigError("c_high must be a non-empty proper subset of the classes")
        if self.background is not None and self.background not in self.space.names:
            raise ConfigError(f"background class {self.background!r} is not in the label space")

    @property
    def background_index(self) -> int:
        return self.space.index(self.background) if self.background is not None else 0

    @classmethod
    def from_json(cls, data: dict, condition: Optional[Condition] = None) -> "ContractConfig":
        """
        Build from a parsed JSON object.

        Args:
            data: Contract configuration
            condition: Overrides the file's "condition" for nested margin tables
        """
        require_keys(data, ["classes", "margins_mm", "c_high"], "contract config")
        try:
            space = LabelSpace(tuple(data["classes"]))
            c_high = space.subset(data["c_high"])
        except LabelSpaceError as e:
            raise ConfigError(f"contract config: {e}") from e

        if condition is None:
            condition = Condition.parse(data.get("condition", Condition.NEUROTYPICAL.value))
        raw = data["margins_mm"]
        if not isinstance(raw, dict):
            raise ConfigError("contract config: margins_mm must be an object")
        if raw and all(isinstance(v, dict) for v in raw.values()):
            margins = MarginTable.from_json({"margins_mm": raw}).margins_for(condition)
        else:
            try:
                margins = {c: float(v) for c, v in raw.items()}
            except (TypeError, ValueError) as e:
                raise ConfigError(f"contract config: margins_mm values must be numbers: {e}") from e

        gmm = Gmm2.from_json(data["gmm"]) if data.get("gmm") else None
        return cls(
            space=space,
            margins=margins,
            c_high=c_high,
            phi=ThresholdKind.parse(data.get("phi", "hard")),
            epsilon=float(data.get("epsilon", DEFAULT_EPSILON)),
            background=data.get("background"),
            gmm=gmm,
            condition=condition,
        )

    @classmethod
    def load(cls, path, condition: Optional[Condition] = None) -> "ContractConfig":
        return cls.from_json(load_json(path), condition)
