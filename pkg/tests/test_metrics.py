import numpy as np
import pytest

from factories import box_mask
from oracles import hd95_brute, sort_interpolate
from veritas_py.core.conditions import Condition
from veritas_py.core.volumes import GridMeta, MaskVolume
from veritas_py.metrics.margins import (
    MarginTable,
    margin_for_other_pathologies,
    tune_margin,
    tune_margin_table,
)
from veritas_py.metrics.overlap import dice
from veritas_py.metrics.surface import hd95, hd95_fn, surface_voxels
from veritas_py.utils.exceptions import ConfigError, EmptyMaskError, ValidationError


class TestDice:
    def test_identical(self, meta8):
        a = box_mask(meta8, (1, 1, 1), (5, 5, 5))
        assert dice(a, a) == 1.0

    def test_disjoint(self, meta8):
        assert dice(box_mask(meta8, (0, 0, 0), (2, 2, 2)), box_mask(meta8, (4, 4, 4), (6, 6, 6))) == 0.0

    def test_half_overlap(self, meta8):
        a = box_mask(meta8, (0, 0, 0), (2, 2, 2))
        b = box_mask(meta8, (1, 0, 0), (3, 2, 2))
        assert dice(a, b) == pytest.approx(0.5)

    def test_both_empty(self, meta8):
        empty = MaskVolume(meta8, np.zeros(meta8.dims))
        assert dice(empty, empty) == 1.0


class TestHd95:
    def test_identical_masks(self, meta8):
        a = box_mask(meta8, (1, 1, 1), (6, 6, 6))
        assert hd95(a, a) == 0.0

    def test_shifted_box(self):
        meta = GridMeta((12, 12, 12))
        a = box_mask(meta, (2, 2, 2), (7, 7, 7))
        b = box_mask(meta, (4, 2, 2), (9, 7, 7))
        assert hd95(a, b) == pytest.approx(hd95_brute(a.data, b.data), rel=1e-12)

    def test_anisotropic_spacing(self):
        meta = GridMeta((10, 10, 6), (0.8, 0.8, 2.0))
        a = box_mask(meta, (1, 1, 1), (6, 6, 4))
        b = box_mask(meta, (3, 2, 2), (9, 8, 5))
        assert hd95(a, b) == pytest.approx(hd95_brute(a.data, b.data, meta.spacing), rel=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_masks_match_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        meta = GridMeta((8, 8, 8))
        a = MaskVolume(meta, rng.random(meta.dims) < 0.3)
        b = MaskVolume(meta, rng.random(meta.dims) < 0.3)
        assert hd95(a, b) == pytest.approx(hd95_brute(a.data, b.data), rel=1e-12)

    def test_empty_mask(self, meta8):
        empty = MaskVolume(meta8, np.zeros(meta8.dims))
        with pytest.raises(EmptyMaskError):
            hd95(empty, box_mask(meta8, (0, 0, 0), (2, 2, 2)))

    def test_single_voxel_is_surface(self, meta8):
        data = np.zeros(meta8.dims, dtype=bool)
        data[3, 3, 3] = True
        assert surface_voxels(data).sum() == 1


class TestMarginDistance:
    def test_pred_covers_gt(self, meta8):
        pred = box_mask(meta8, (1, 1, 1), (7, 7, 7))
        gt = box_mask(meta8, (2, 2, 2), (5, 5, 5))
        assert hd95_fn(pred, gt) == 0.0

    def test_false_negatives_only(self):
        meta = GridMeta((12, 12, 12))
        pred = box_mask(meta, (2, 2, 2), (6, 6, 6))
        gt = box_mask(meta, (2, 2, 2), (9, 6, 6))
        union = pred.data | gt.data
        assert hd95_fn(pred, gt) == pytest.approx(hd95_brute(pred.data, union), rel=1e-12)
        assert hd95_fn(pred, gt) > 0

    def test_empty_prediction(self, meta8):
        with pytest.raises(EmptyMaskError):
            hd95_fn(MaskVolume(meta8, np.zeros(meta8.dims)), box_mask(meta8, (0, 0, 0), (2, 2, 2)))


class TestMarginTuning:
    def _pairs_with_margins(self, shifts):
        meta = GridMeta((24, 6, 6))
        pairs = []
        for s in shifts:
            pred = box_mask(meta, (0, 0, 0), (2, 6, 6))
            gt = box_mask(meta, (0, 0, 0), (2 + s, 6, 6))
            pairs.append((pred, gt))
        return pairs

    def test_matches_sort_interpolate(self):
        pairs = self._pairs_with_margins([1, 4, 2, 7, 3, 9])
        values = [hd95_fn(p, g) for p, g in pairs]
        assert tune_margin(pairs) == pytest.approx(sort_interpolate(values, 95.0), rel=1e-14)

    def test_no_pairs(self):
        with pytest.raises(ValidationError):
            tune_margin([])

    def test_table_and_other_pathologies(self, tmp_path):
        cases = {
            ("wm", Condition.NEUROTYPICAL): self._pairs_with_margins([1, 2]),
            ("wm", Condition.SPINA_BIFIDA): self._pairs_with_margins([5, 6]),
        }
        table = tune_margin_table(cases)
        nt = table.get("wm", Condition.NEUROTYPICAL)
        sb = table.get("wm", Condition.SPINA_BIFIDA)
        assert sb > nt
        assert table.get("wm", Condition.OTHER) == max(nt, sb)
        assert margin_for_other_pathologies(table, "wm") == sb

        table.save(tmp_path / "margins.json")
        assert MarginTable.load(tmp_path / "margins.json").entries == table.entries

    def test_other_needs_both_conditions(self):
        table = MarginTable()
        table.set("wm", Condition.NEUROTYPICAL, 1.0)
        with pytest.raises(ConfigError):
            table.get("wm", Condition.OTHER)

    def test_negative_margin(self):
        with pytest.raises(ValidationError):
            MarginTable().set("wm", Condition.NEUROTYPICAL, -1.0)

    def test_margins_for_condition(self):
        table = MarginTable()
        table.set("wm", Condition.NEUROTYPICAL, 1.0)
        table.set("wm", Condition.SPINA_BIFIDA, 3.0)
        table.set("csf", Condition.NEUROTYPICAL, 2.0)
        table.set("csf", Condition.SPINA_BIFIDA, 0.5)
        assert table.margins_for(Condition.SPINA_BIFIDA) == {"csf": 0.5, "wm": 3.0}
        assert table.margins_for(Condition.OTHER) == {"csf": 2.0, "wm": 3.0}
