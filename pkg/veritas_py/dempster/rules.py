"""
Dempster's rule of combination.

These are the generic, exhaustive forms: every pair of focal elements is
visited. They serve as the reference for the O(K) fast paths of the
contracts and fusion modules.
"""

from functools import reduce
from typing import Optional, Sequence

import numpy as np

from ..core.labels import LabelSpace
from ..utils.constants import AGREEMENT_FLOOR, DENSE_BPA_MAX_CLASSES
from ..utils.exceptions import ContradictionError, LabelSpaceError
from .bpa import Bpa, ClassProbability, singleton_plausibilities


def _same_space(m1: Bpa, m2: Bpa):
    if m1.space != m2.space:
        raise LabelSpaceError(f"BPAs over different label spaces: {m1.space.names} vs {m2.space.names}")


def _pairs(m1: Bpa, m2: Bpa):
    intersections = np.bitwise_and.outer(m1.focal, m2.focal)
    products = np.outer(m1.masses, m2.masses)
    return intersections, products


def contradiction_mass(m1: Bpa, m2: Bpa) -> float:
    """Total mass on pairs of disjoint focal elements; 1 means complete contradiction."""
    _same_space(m1, m2)
    intersections, products = _pairs(m1, m2)
    return float(min(1.0, products[intersections == 0].sum()))


def combine(m1: Bpa, m2: Bpa) -> Bpa:
    """
    Dempster's rule m1 ⊕ m2.

    Raises:
        ContradictionError: when the agreeing mass 1 - K is at most 1e-15
    """
    _same_space(m1, m2)
    intersections, products = _pairs(m1, m2)
    keep = intersections != 0
    subsets = intersections[keep]
    weights = products[keep]
    agreement = float(weights.sum())
    if agreement <= AGREEMENT_FLOOR:
        raise ContradictionError(f"complete contradiction between BPAs (agreeing mass {agreement!r})")
    space = m1.space
    if space.K <= DENSE_BPA_MAX_CLASSES:
        dense = np.bincount(subsets, weights=weights, minlength=1 << space.K)
        dense /= dense.sum()
        return Bpa.from_dense(space, dense)

    unique, inverse = np.unique(subsets, return_inverse=True)
    sums = np.bincount(inverse, weights=weights)
    return Bpa(space, unique, sums / sums.sum())


def combine_many(ms: Sequence[Bpa], space: Optional[LabelSpace] = None) -> Bpa:
    """
    Left fold of Dempster's rule.

    An empty list folds to the vacuous BPA of `space`.
    """
    ms = list(ms)
    if not ms:
        if space is None:
            raise LabelSpaceError("combine_many of an empty list needs a label space")
        return Bpa.vacuous(space)
    if space is not None and ms[0].space != space:
        raise LabelSpaceError("BPAs do not live in the requested label space")
    return reduce(combine, ms)


def combine_prob(p: ClassProbability, m: Bpa) -> ClassProbability:
    """
    Combine a probability with a BPA; the result is again a probability.

    (p ⊕ m)(c) = p(c)·Pl_m({c}) / Σ_c' p(c')·Pl_m({c'})
    """
    if p.space != m.space:
        raise LabelSpaceError("probability and BPA over different label spaces")
    weighted = p.p * singleton_plausibilities(m)
    total = float(weighted.sum())
    if total <= AGREEMENT_FLOOR:
        raise ContradictionError("probability is completely contradictory with the BPA")
    return ClassProbability(p.space, weighted / total)
