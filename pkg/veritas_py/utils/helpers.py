"""
Small shared helpers.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np

from .constants import ENV_SEED, ENV_THREADS
from .config import env_int

T = TypeVar("T")
R = TypeVar("R")


def percentile(values: Sequence[float], q: float) -> float:
    """Percentile with linear interpolation between closest ranks."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("percentile of an empty sequence")
    return float(np.percentile(arr, q, method="linear"))


def resolve_threads(threads: Optional[int] = None) -> int:
    """Thread cap: explicit value, then VERITAS_THREADS, then CPU count."""
    if threads is None:
        threads = env_int(ENV_THREADS)
    if threads is None:
        threads = os.cpu_count() or 1
    return max(1, int(threads))


def resolve_seed(seed: Optional[int] = None, default: int = 0) -> int:
    """Seed: explicit value, then VERITAS_SEED, then the default."""
    if seed is not None:
        return int(seed)
    return env_int(ENV_SEED, default)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Ordered map, threaded when threads > 1. Results do not depend on threads."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
