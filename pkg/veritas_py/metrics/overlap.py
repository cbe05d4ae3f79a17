"""
Overlap metrics.
"""

from ..core.volumes import MaskVolume


def dice(a: MaskVolume, b: MaskVolume) -> float:
    """
    Dice score 2|A∩B| / (|A| + |B|).

    Two empty masks score 1.
    """
    a.meta.check_same(b.meta, "dice inputs")
    size_a = int(a.data.sum())
    size_b = int(b.data.sum())
    if size_a + size_b == 0:
        return 1.0
    inter = int((a.data & b.data).sum())
    return 2.0 * inter / (size_a + size_b)
