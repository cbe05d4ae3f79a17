"""
Label spaces and subset bitmasks.

A LabelSpace is the ordered class set C; a SubsetMask selects a subset of
C with one bit per class (bit c set means class c is in the subset).
"""

from dataclasses import dataclass
from typing import Iterable, Iterator, List, Sequence, Tuple, Union

import numpy as np

from ..utils.config import load_json, require_keys
from ..utils.constants import MAX_CLASSES, MIN_CLASSES, SUBSET_SEPARATOR
from ..utils.exceptions import LabelSpaceError


@dataclass(frozen=True)
class SubsetMask:
    """K-bit mask selecting a subset of a label space."""

    bits: int
    K: int

    def __post_init__(self):
        if not 1 <= self.K <= MAX_CLASSES:
            raise LabelSpaceError(f"K must be in [1, {MAX_CLASSES}], got {self.K}")
        if self.bits < 0 or self.bits >> self.K:
            raise LabelSpaceError(f"mask {self.bits:#x} has bits outside the low {self.K}")

    def __int__(self) -> int:
        return self.bits

    def __index__(self) -> int:
        return self.bits

    def __contains__(self, c: int) -> bool:
        return bool((self.bits >> c) & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(c for c in range(self.K) if (self.bits >> c) & 1)

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def __and__(self, other: "SubsetMask") -> "SubsetMask":
        return SubsetMask(self.bits & int(other), self.K)

    def __or__(self, other: "SubsetMask") -> "SubsetMask":
        return SubsetMask(self.bits | int(other), self.K)

    @property
    def is_empty(self) -> bool:
        return self.bits == 0

    @property
    def is_full(self) -> bool:
        return self.bits == (1 << self.K) - 1

    def complement(self) -> "SubsetMask":
        return SubsetMask(((1 << self.K) - 1) ^ self.bits, self.K)


MaskLike = Union[SubsetMask, int]


@dataclass(frozen=True)
class LabelSpace:
    """
    Ordered set of class identifiers.

    Attributes:
        names: Class names, unique and non-empty, 2 <= K <= 30
    """

    names: Tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not MIN_CLASSES <= len(names) <= MAX_CLASSES:
            raise LabelSpaceError(
                f"label space needs {MIN_CLASSES}..{MAX_CLASSES} classes, got {len(names)}"
            )
        if any(not isinstance(n, str) or not n for n in names):
            raise LabelSpaceError("class names must be non-empty strings")
        if len(set(names)) != len(names):
            raise LabelSpaceError(f"duplicate class names in {list(names)}")
        if any(SUBSET_SEPARATOR in n for n in names):
            raise LabelSpaceError(f"class names may not contain {SUBSET_SEPARATOR!r}")

    @property
    def K(self) -> int:
        return len(self.names)

    @property
    def full_bits(self) -> int:
        return (1 << self.K) - 1

    def full(self) -> SubsetMask:
        return SubsetMask(self.full_bits, self.K)

    def empty(self) -> SubsetMask:
        return SubsetMask(0, self.K)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise LabelSpaceError(f"unknown class {name!r}; known: {list(self.names)}") from None

    def singleton(self, c: Union[int, str]) -> SubsetMask:
        c = self.index(c) if isinstance(c, str) else int(c)
        if not 0 <= c < self.K:
            raise LabelSpaceError(f"class index {c} out of range")
        return SubsetMask(1 << c, self.K)

    def subset(self, members: Iterable[Union[int, str]]) -> SubsetMask:
        bits = 0
        for m in members:
            bits |= int(self.singleton(m))
        return SubsetMask(bits, self.K)

    def mask(self, value: MaskLike) -> SubsetMask:
        """Coerce an int or SubsetMask into a SubsetMask of this space."""
        if isinstance(value, SubsetMask):
            if value.K != self.K:
                raise LabelSpaceError(f"subset of K={value.K} used in space of K={self.K}")
            return value
        return SubsetMask(int(value), self.K)

    def members(self, value: MaskLike) -> List[str]:
        return [self.names[c] for c in self.mask(value)]

    def subset_name(self, value: MaskLike) -> str:
        """Name a subset by its '|'-joined class names in label order."""
        return SUBSET_SEPARATOR.join(self.members(value))

    def parse_subset(self, text: str) -> SubsetMask:
        parts = [p.strip() for p in text.split(SUBSET_SEPARATOR)]
        if any(not p for p in parts):
            raise LabelSpaceError(f"malformed subset name {text!r}")
        return self.subset(parts)

    def to_json(self) -> dict:
        return {"classes": list(self.names)}

    @classmethod
    def from_json(cls, data: dict) -> "LabelSpace":
        require_keys(data, ["classes"], "label space")
        return cls(tuple(data["classes"]))

    @classmethod
    def load(cls, path) -> "LabelSpace":
        return cls.from_json(load_json(path))


def indicator_matrix(bits: Sequence[int], K: int) -> np.ndarray:
    """(..., K) boolean array: entry c tells whether class c is in the subset."""
    arr = np.asarray(bits, dtype=np.int64)
    return ((arr[..., None] >> np.arange(K)) & 1).astype(bool)
