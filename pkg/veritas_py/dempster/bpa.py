"""
Basic probability assignments (BPAs) and class probabilities.

A BPA stores its focal elements (subsets with non-zero mass) as two
parallel arrays: subset bitmasks and masses.
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Union

import numpy as np

from ..core.labels import LabelSpace, MaskLike, indicator_matrix
from ..utils.config import load_json, require_keys, save_json
from ..utils.constants import BPA_TOLERANCE
from ..utils.exceptions import LabelSpaceError, ValidationError


@dataclass(frozen=True)
class Bpa:
    """
    Mass function over subsets of a label space.

    Attributes:
        space: Label space C
        focal: int64 bitmasks of the focal elements, sorted, unique
        masses: Masses of the focal elements, > 0, summing to 1
    """

    space: LabelSpace
    focal: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        focal = np.asarray(self.focal, dtype=np.int64).ravel()
        masses = np.asarray(self.masses, dtype=np.float64).ravel()
        if focal.shape != masses.shape:
            raise ValidationError("focal elements and masses differ in length")
        if not np.all(np.isfinite(masses)) or np.any(masses < 0):
            raise ValidationError("BPA masses must be finite and >= 0")
        if np.any(focal < 0) or np.any(focal > self.space.full_bits):
            raise LabelSpaceError(f"BPA subset outside the {self.space.K}-class space")
        if np.any((focal == 0) & (masses > 0)):
            raise ValidationError("BPA mass on the empty set must be 0")
        total = float(masses.sum())
        if abs(total - 1.0) > BPA_TOLERANCE:
            raise ValidationError(f"BPA masses sum to {total!r}, expected 1")

        keep = masses > 0
        focal, masses = focal[keep], masses[keep]
        order = np.argsort(focal, kind="stable")
        focal, masses = focal[order], masses[order]
        if np.any(np.diff(focal) == 0):
            raise ValidationError("BPA lists a subset twice")
        focal.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "focal", focal)
        object.__setattr__(self, "masses", masses)

    @classmethod
    def from_mapping(cls, space: LabelSpace, masses: Mapping[MaskLike, float]) -> "Bpa":
        """Build from {subset: mass}; repeated subsets are rejected."""
        focal = [int(space.mask(k)) for k in masses]
        return cls(space, np.array(focal, dtype=np.int64), np.array(list(masses.values()), dtype=np.float64))

    @classmethod
    def from_dense(cls, space: LabelSpace, dense: np.ndarray) -> "Bpa":
        """Build from a length-2^K array indexed by subset bits."""
        dense = np.asarray(dense, dtype=np.float64)
        if dense.shape != (1 << space.K,):
            raise ValidationError(f"dense BPA needs {1 << space.K} entries")
        nonzero = np.flatnonzero(dense)
        return cls(space, nonzero.astype(np.int64), dense[nonzero])

    @classmethod
    def vacuous(cls, space: LabelSpace) -> "Bpa":
        """Total ignorance: all mass on C."""
        return cls(space, np.array([space.full_bits]), np.array([1.0]))

    def mass(self, subset: MaskLike) -> float:
        bits = int(self.space.mask(subset))
        pos = np.searchsorted(self.focal, bits)
        if pos < self.focal.size and self.focal[pos] == bits:
            return float(self.masses[pos])
        return 0.0

    def dense(self) -> np.ndarray:
        out = np.zeros(1 << self.space.K)
        out[self.focal] = self.masses
        return out

    def as_dict(self) -> Dict[int, float]:
        return {int(f): float(m) for f, m in zip(self.focal, self.masses)}

    def is_vacuous(self) -> bool:
        return self.focal.size == 1 and int(self.focal[0]) == self.space.full_bits

    def to_json(self) -> dict:
        return {
            "classes": list(self.space.names),
            "masses": {self.space.subset_name(int(f)): float(m) for f, m in zip(self.focal, self.masses)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Bpa":
        require_keys(data, ["classes", "masses"], "BPA")
        space = LabelSpace(tuple(data["classes"]))
        masses = {}
        for name, value in data["masses"].items():
            bits = int(space.parse_subset(name))
            if bits in masses:
                raise ValidationError(f"BPA lists subset {name!r} twice")
            masses[bits] = float(value)
        return cls.from_mapping(space, masses)

    @classmethod
    def load(cls, path) -> "Bpa":
        return cls.from_json(load_json(path))

    def save(self, path):
        save_json(self.to_json(), path)


@dataclass(frozen=True)
class ClassProbability:
    """
    Probability over the classes of a label space.

    Attributes:
        space: Label space C
        p: K non-negative reals summing to 1
    """

    space: LabelSpace
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=np.float64, copy=True).ravel()
        if p.shape != (self.space.K,):
            raise ValidationError(f"probability needs {self.space.K} entries, got {p.size}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValidationError("probabilities must be finite and >= 0")
        if abs(float(p.sum()) - 1.0) > BPA_TOLERANCE:
            raise ValidationError(f"probabilities sum to {float(p.sum())!r}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def __getitem__(self, c: Union[int, str]) -> float:
        if isinstance(c, str):
            c = self.space.index(c)
        return float(self.p[c])


def from_probability(p: ClassProbability) -> Bpa:
    """BPA with mass p(c) on each singleton {c}."""
    return Bpa(p.space, np.left_shift(1, np.arange(p.space.K, dtype=np.int64)), p.p)


def plausibility(m: Bpa, subset: MaskLike) -> float:
    """Pl(A) = sum of masses of focal sets intersecting A."""
    bits = int(m.space.mask(subset))
    return float(m.masses[(m.focal & bits) != 0].sum())


def belief(m: Bpa, subset: MaskLike) -> float:
    """Bel(A) = sum of masses of focal sets contained in A."""
    bits = int(m.space.mask(subset))
    return float(m.masses[(m.focal & ~bits) == 0].sum())


def singleton_plausibilities(m: Bpa) -> np.ndarray:
    """Vector of Pl({c}) = sum over focal F containing c of m(F)."""
    return indicator_matrix(m.focal, m.space.K).T.astype(np.float64) @ m.masses


def to_probability(m: Bpa, tol: float = BPA_TOLERANCE) -> ClassProbability:
    """Read a Bayesian BPA (singleton focal sets only) as a class probability."""
    singletons = (m.focal & (m.focal - 1)) == 0
    stray = float(m.masses[~singletons].sum())
    if stray > tol:
        raise ValidationError(f"BPA has {stray:.3g} mass on non-singleton sets")
    p = np.zeros(m.space.K)
    idx = np.log2(m.focal[singletons]).round().astype(int)
    p[idx] = m.masses[singletons]
    return ClassProbability(m.space, p / p.sum())
