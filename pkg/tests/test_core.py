import json

import numpy as np
import pytest
from PIL import Image

from factories import random_probs
from veritas_py.core.conditions import Condition
from veritas_py.core.io import read_volume, write_volume
from veritas_py.core.labels import LabelSpace, SubsetMask, indicator_matrix
from veritas_py.core.preview import save_slice_png, slice_to_uint8
from veritas_py.core.volumes import (
    GridMeta,
    LabelSetVolume,
    MaskVolume,
    ProbabilityVolume,
    ScalarVolume,
    argmax_labels,
    class_masks,
    renormalize,
)
from veritas_py.utils.exceptions import (
    ConfigError,
    GridMismatchError,
    LabelSpaceError,
    ValidationError,
    VolumeFormatError,
)


class TestLabelSpace:
    def test_subset_names_round_trip(self, space3):
        mask = space3.subset(["c", "a"])
        assert int(mask) == 0b101
        assert space3.subset_name(mask) == "a|c"
        assert space3.parse_subset("c|a") == mask

    def test_rejects_bad_spaces(self):
        with pytest.raises(LabelSpaceError):
            LabelSpace(("only",))
        with pytest.raises(LabelSpaceError):
            LabelSpace(("a", "a"))
        with pytest.raises(LabelSpaceError):
            LabelSpace(tuple(f"c{i}" for i in range(31)))
        with pytest.raises(LabelSpaceError):
            LabelSpace(("a|b", "c"))

    def test_unknown_class(self, space3):
        with pytest.raises(LabelSpaceError):
            space3.index("z")

    def test_mask_outside_space(self):
        with pytest.raises(LabelSpaceError):
            SubsetMask(0b1000, 3)

    def test_complement_and_iteration(self, space4):
        mask = space4.subset(["wm", "gm"])
        assert list(mask) == [1, 3]
        assert len(mask) == 2
        assert list(mask.complement()) == [0, 2]
        assert space4.full().is_full

    def test_json(self, space3, tmp_path):
        path = tmp_path / "space.json"
        path.write_text(json.dumps(space3.to_json()))
        assert LabelSpace.load(path) == space3

    def test_indicator_matrix(self):
        ind = indicator_matrix([0b011, 0b100], 3)
        assert ind.tolist() == [[True, True, False], [False, False, True]]


def test_condition_parse():
    assert Condition.parse("Spina-Bifida") is Condition.SPINA_BIFIDA
    assert Condition.parse(" neurotypical ") is Condition.NEUROTYPICAL
    with pytest.raises(ConfigError):
        Condition.parse("unknown")


class TestVolumes:
    def test_grid_validation(self):
        with pytest.raises(ValidationError):
            GridMeta((0, 2, 2))
        with pytest.raises(ValidationError):
            GridMeta((2, 2, 2), (1.0, -1.0, 1.0))

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            GridMeta((2, 2, 2)).check_same(GridMeta((2, 2, 3)))

    def test_probability_sums(self, meta8):
        data = np.full(meta8.dims + (2,), 0.5)
        data[0, 0, 0] = (0.5, 0.6)
        with pytest.raises(ValidationError):
            ProbabilityVolume(meta8, data)

    def test_volumes_are_read_only(self, meta8):
        vol = ScalarVolume(meta8, np.zeros(meta8.dims))
        with pytest.raises(ValueError):
            vol.data[0, 0, 0] = 1.0

    def test_scalar_rejects_nan(self, meta8):
        data = np.zeros(meta8.dims)
        data[1, 1, 1] = np.nan
        with pytest.raises(ValidationError):
            ScalarVolume(meta8, data)

    def test_labelset_rejects_empty_subset(self, meta8):
        with pytest.raises(ValidationError):
            LabelSetVolume(meta8, 3, np.zeros(meta8.dims, dtype=np.uint32))

    def test_argmax_and_class_masks_partition(self, meta8, space3, rng):
        probs = ProbabilityVolume(meta8, random_probs(rng, meta8.dims, 3))
        labels = argmax_labels(probs)
        assert labels.is_singletons()
        masks = class_masks(labels, space3)
        total = sum(m.data.astype(int) for m in masks.values())
        assert np.all(total == 1)
        assert np.array_equal(masks["b"].data, np.argmax(probs.data, axis=3) == 1)

    def test_renormalize_idempotent(self, rng):
        data = rng.random((4, 4, 4, 3)) + 0.1
        once = renormalize(data)
        np.testing.assert_allclose(renormalize(once), once, atol=1e-15)

    def test_renormalize_zero_total(self):
        with pytest.raises(ValidationError):
            renormalize(np.zeros((1, 1, 1, 2)))


class TestVolumeIO:
    def test_probability_round_trip(self, tmp_path, rng):
        meta = GridMeta((3, 4, 5), (0.8, 0.8, 1.2))
        probs = ProbabilityVolume(meta, random_probs(rng, meta.dims, 4).astype(np.float32).astype(np.float64))
        probs = probs.renormalized()
        write_volume(probs, tmp_path / "p.json")
        back = read_volume(tmp_path / "p.json")
        assert isinstance(back, ProbabilityVolume)
        assert back.meta == meta
        np.testing.assert_allclose(back.data, probs.data, atol=1e-6)

    def test_body_is_channel_fastest(self, tmp_path):
        meta = GridMeta((2, 1, 1))
        data = np.array([[[[0.25, 0.75]]], [[[1.0, 0.0]]]])
        write_volume(ProbabilityVolume(meta, data), tmp_path / "p.json")
        body = np.frombuffer((tmp_path / "p.raw").read_bytes(), dtype="<f4")
        assert body.tolist() == [0.25, 0.75, 1.0, 0.0]

    def test_mask_and_labelset(self, tmp_path, meta8):
        mask = MaskVolume(meta8, np.arange(512).reshape(meta8.dims) % 3 == 0)
        write_volume(mask, tmp_path / "m.json")
        assert np.array_equal(read_volume(tmp_path / "m.json").data, mask.data)

        labels = LabelSetVolume(meta8, 5, np.full(meta8.dims, 0b10110, dtype=np.uint32))
        write_volume(labels, tmp_path / "l.json")
        back = read_volume(tmp_path / "l.json")
        assert isinstance(back, LabelSetVolume)
        assert back.K == 5
        assert np.array_equal(back.data, labels.data)

    def test_displacement_field(self, tmp_path, rng):
        meta = GridMeta((2, 3, 4))
        disp = ScalarVolume(meta, rng.normal(size=meta.dims + (3,)).astype(np.float32))
        write_volume(disp, tmp_path / "d.json")
        back = read_volume(tmp_path / "d.json")
        assert back.channels == 3
        np.testing.assert_array_equal(back.data, disp.data)

    def test_size_mismatch(self, tmp_path, meta8):
        write_volume(MaskVolume(meta8, np.ones(meta8.dims)), tmp_path / "m.json")
        (tmp_path / "m.raw").write_bytes(b"\x01" * 10)
        with pytest.raises(VolumeFormatError):
            read_volume(tmp_path / "m.json")

    def test_nan_payload(self, tmp_path):
        meta = GridMeta((1, 1, 2))
        write_volume(ScalarVolume(meta, np.zeros(meta.dims)), tmp_path / "s.json")
        (tmp_path / "s.raw").write_bytes(np.array([0.0, np.nan], dtype="<f4").tobytes())
        with pytest.raises(VolumeFormatError):
            read_volume(tmp_path / "s.json")

    def test_bad_kind(self, tmp_path):
        header = {"dims": [1, 1, 1], "spacing_mm": [1, 1, 1], "dtype": "u8", "kind": "weird", "channels": 1}
        (tmp_path / "x.json").write_text(json.dumps(header))
        (tmp_path / "x.raw").write_bytes(b"\x00")
        with pytest.raises(VolumeFormatError):
            read_volume(tmp_path / "x.json")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_volume(tmp_path / "absent.json")


def test_preview_png(tmp_path, meta8):
    data = np.zeros(meta8.dims)
    data[:, :, 4] = np.linspace(0.0, 1.0, 8)[:, None]
    vol = ScalarVolume(meta8, data)
    pixels = slice_to_uint8(vol, vmin=0.0, vmax=1.0)
    assert pixels.dtype == np.uint8
    assert pixels[0, 0] == 0 and pixels[0, -1] == 255

    save_slice_png(vol, tmp_path / "slice.png")
    with Image.open(tmp_path / "slice.png") as img:
        assert img.size == (8, 8)
