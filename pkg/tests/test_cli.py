import csv
import io
import json

import numpy as np
import pytest

from factories import box_mask, random_probs
from veritas_py.cli import build_parser, main
from veritas_py.core.io import read_volume, write_volume
from veritas_py.core.volumes import GridMeta, LabelSetVolume, MaskVolume, ProbabilityVolume, ScalarVolume

META = GridMeta((10, 6, 6))
CONTRACTS = {
    "classes": ["background", "wm", "csf"],
    "epsilon": 1e-3,
    "margins_mm": {"background": 1.0, "wm": 1.0, "csf": 1.0},
    "c_high": ["csf"],
    "background": "background",
    "gmm": {"mu_low": 0.0, "sigma_low": 1.0, "mu_high": 10.0, "sigma_high": 1.0},
}


def rows(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.fixture
def fuse_inputs(tmp_path, rng):
    labels = np.zeros(META.dims, dtype=int)
    labels[3:7] = 1
    labels[7:] = 2
    ai_labels = labels.copy()
    ai_labels[6] = 0
    write_volume(ProbabilityVolume(META, 0.9 * np.eye(3)[labels] + 0.1 / 3), tmp_path / "fb.json")
    write_volume(ProbabilityVolume(META, 0.95 * np.eye(3)[ai_labels] + 0.05 / 3), tmp_path / "ai.json")
    image = np.where(labels == 2, 10.0, 0.0) + rng.normal(0.0, 1.0, META.dims)
    write_volume(ScalarVolume(META, image), tmp_path / "image.json")
    (tmp_path / "contracts.json").write_text(json.dumps(CONTRACTS))
    return tmp_path


def fuse_argv(d, out, *extra):
    return [
        "fuse", "--ai", str(d / "ai.json"), "--fallback", str(d / "fb.json"), "--image", str(d / "image.json"),
        "--config", str(d / "contracts.json"), "--out", str(d / out), *extra,
    ]


class TestDispatch:
    def test_no_command(self, capsys):
        assert main([]) == 1

    def test_unknown_command(self, capsys):
        assert main(["segment-everything"]) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_required_flag(self, capsys):
        assert main(["metrics", "--a", "x.json"]) == 1

    @pytest.mark.parametrize(
        "command, flags",
        [
            ("fuse", ["--ai", "--fallback", "--image", "--config", "--epsilon", "--conflict-png"]),
            ("fallback-fuse", ["--manifest", "--ga-weeks", "--condition", "--sigma-mm", "--knot-spacing"]),
            ("tune-margins", ["--cases", "--out"]),
            ("fit-gmm", ["--image", "--mask"]),
            ("procrustes", ["--landmarks", "--ga-target"]),
            ("atlas-average", ["--manifest", "--flip-axis", "--sigma-days"]),
            ("losses", ["--probs", "--labels", "--alpha", "--eps"]),
            ("dro-demo", ["--mode", "--beta", "--select-beta", "--epochs"]),
            ("metrics", ["--a", "--b", "--case-id", "--class"]),
            ("combine-bpa", ["--bpa"]),
        ],
    )
    def test_help_lists_flags(self, capsys, command, flags):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args([command, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for flag in flags + ["--threads", "--seed", "--log-level"]:
            assert flag in text


class TestMetrics:
    def test_identical_masks(self, tmp_path, capsys, meta8):
        write_volume(box_mask(meta8, (1, 1, 1), (5, 5, 5)), tmp_path / "m.json")
        code = main(["metrics", "--a", str(tmp_path / "m.json"), "--b", str(tmp_path / "m.json")])
        assert code == 0
        assert rows(capsys.readouterr().out) == [
            ["case_id", "class", "dice", "hd95", "hd95_fn"],
            ["m", "foreground", "1.0", "0.0", "0.0"],
        ]

    def test_case_and_class_columns(self, tmp_path, capsys, meta8):
        write_volume(box_mask(meta8, (1, 1, 1), (5, 5, 5)), tmp_path / "pred.json")
        write_volume(box_mask(meta8, (1, 1, 1), (5, 5, 6)), tmp_path / "gt.json")
        argv = ["metrics", "--a", str(tmp_path / "pred.json"), "--b", str(tmp_path / "gt.json"),
                "--case-id", "sub-007", "--class", "csf"]
        assert main(argv) == 0
        header, row = rows(capsys.readouterr().out)
        assert header == ["case_id", "class", "dice", "hd95", "hd95_fn"]
        assert row[:2] == ["sub-007", "csf"]
        assert float(row[2]) < 1.0
        assert float(row[4]) > 0.0

    def test_missing_file(self, tmp_path, capsys):
        missing = tmp_path / "nope.json"
        assert main(["metrics", "--a", str(missing), "--b", str(missing)]) == 1
        assert str(missing) in capsys.readouterr().err

    def test_unreadable_path_is_invalid(self, tmp_path, capsys):
        assert main(["metrics", "--a", str(tmp_path), "--b", str(tmp_path)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_empty_mask_is_invalid(self, tmp_path, capsys, meta8):
        write_volume(MaskVolume(meta8, np.zeros(meta8.dims)), tmp_path / "empty.json")
        write_volume(box_mask(meta8, (1, 1, 1), (5, 5, 5)), tmp_path / "m.json")
        assert main(["metrics", "--a", str(tmp_path / "empty.json"), "--b", str(tmp_path / "m.json")]) == 1

    def test_wrong_volume_kind(self, tmp_path, capsys, meta8):
        write_volume(ScalarVolume(meta8, np.zeros(meta8.dims)), tmp_path / "s.json")
        assert main(["metrics", "--a", str(tmp_path / "s.json"), "--b", str(tmp_path / "s.json")]) == 1
        assert "expected a mask volume" in capsys.readouterr().err


class TestFuse:
    def test_writes_outputs(self, fuse_inputs, capsys):
        d = fuse_inputs
        code = main(fuse_argv(d, "fused.json", "--conflict", str(d / "conflict.json"),
                              "--conflict-png", str(d / "conflict.png"), "--threads", "2"))
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["incident_fraction"] == pytest.approx(1.0 / 7.0)
        fused = read_volume(d / "fused.json")
        assert isinstance(fused, ProbabilityVolume)
        assert fused.K == 3
        conflict = read_volume(d / "conflict.json")
        assert np.all(conflict.data[6] > 0.9)
        assert (d / "conflict.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_byte_identical_reruns(self, fuse_inputs, capsys):
        d = fuse_inputs
        assert main(fuse_argv(d, "a.json", "--threads", "1")) == 0
        assert main(fuse_argv(d, "b.json", "--threads", "3")) == 0
        assert (d / "a.raw").read_bytes() == (d / "b.raw").read_bytes()

    def test_grid_mismatch(self, fuse_inputs, capsys):
        d = fuse_inputs
        other = GridMeta((10, 6, 5))
        write_volume(ScalarVolume(other, np.zeros(other.dims)), d / "image.json")
        assert main(fuse_argv(d, "fused.json")) == 1
        assert "grid mismatch" in capsys.readouterr().err

    def test_bad_epsilon(self, fuse_inputs, capsys):
        assert main(fuse_argv(fuse_inputs, "fused.json", "--epsilon", "1.5")) == 1


class TestCombineBpa:
    def _write(self, path, masses):
        path.write_text(json.dumps({"classes": ["a", "b", "c"], "masses": masses}))
        return str(path)

    def test_combination(self, tmp_path, capsys):
        m1 = self._write(tmp_path / "m1.json", {"a|b": 0.5, "a|b|c": 0.5})
        m2 = self._write(tmp_path / "m2.json", {"b": 0.5, "a|b|c": 0.5})
        assert main(["combine-bpa", "--bpa", m1, m2, "--out", str(tmp_path / "out.json")]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["masses"] == pytest.approx({"b": 0.5, "a|b": 0.25, "a|b|c": 0.25})
        assert json.loads((tmp_path / "out.json").read_text())["classes"] == ["a", "b", "c"]

    def test_total_contradiction_is_numerical(self, tmp_path, capsys):
        m1 = self._write(tmp_path / "m1.json", {"a": 1.0})
        m2 = self._write(tmp_path / "m2.json", {"c": 1.0})
        assert main(["combine-bpa", "--bpa", m1, m2]) == 2
        assert "contradiction" in capsys.readouterr().err

    def test_invalid_masses(self, tmp_path, capsys):
        m1 = self._write(tmp_path / "m1.json", {"a": 0.7})
        assert main(["combine-bpa", "--bpa", m1]) == 1


class TestDroDemo:
    ARGS = ["dro-demo", "--epochs", "3", "--n-major", "30", "--minority-fraction", "0.1"]

    def test_csv_history(self, capsys):
        assert main(self.ARGS + ["--seed", "4"]) == 0
        table = rows(capsys.readouterr().out)
        assert table[0] == ["epoch", "mean_loss", "acc_class_0", "acc_class_1", "acc_class_2", "entropy"]
        assert [r[0] for r in table[1:]] == ["1", "2", "3"]

    def test_same_seed_same_output(self, capsys):
        main(self.ARGS + ["--seed", "4", "--select-beta"])
        first = capsys.readouterr().out
        main(self.ARGS + ["--seed", "4", "--select-beta"])
        assert capsys.readouterr().out == first

    def test_seed_from_environment(self, capsys, no_env):
        no_env.setenv("VERITAS_SEED", "4")
        main(self.ARGS + ["--mode", "erm"])
        from_env = capsys.readouterr().out
        main(self.ARGS + ["--mode", "erm", "--seed", "4"])
        assert capsys.readouterr().out == from_env


class TestLosses:
    def test_values(self, tmp_path, capsys, rng):
        meta = GridMeta((4, 4, 2))
        labels = rng.integers(0, 3, size=meta.dims)
        g = (1 << labels).astype(np.uint32)
        write_volume(ProbabilityVolume(meta, random_probs(rng, meta.dims, 3)), tmp_path / "p.json")
        write_volume(LabelSetVolume(meta, 3, g), tmp_path / "g.json")
        assert main(["losses", "--probs", str(tmp_path / "p.json"), "--labels", str(tmp_path / "g.json")]) == 0
        table = rows(capsys.readouterr().out)
        assert table[0] == ["loss", "value"]
        assert [r[0] for r in table[1:]] == ["leaf_dice", "marginal_dice", "soft_target_dice", "marginal_cross_entropy"]
        assert all(float(r[1]) >= 0.0 for r in table[1:])

    def test_leaf_dice_skipped_on_overlapping_sets(self, tmp_path, capsys):
        meta = GridMeta((2, 1, 1))
        write_volume(ProbabilityVolume(meta, np.full(meta.dims + (3,), 1.0 / 3)), tmp_path / "p.json")
        write_volume(LabelSetVolume(meta, 3, np.array([[[0b011]], [[0b110]]])), tmp_path / "g.json")
        assert main(["losses", "--probs", str(tmp_path / "p.json"), "--labels", str(tmp_path / "g.json")]) == 0
        names = [r[0] for r in rows(capsys.readouterr().out)[1:]]
        assert "leaf_dice" not in names
        assert "marginal_dice" in names


class TestAtlasCommands:
    def test_procrustes(self, tmp_path, capsys):
        (tmp_path / "lm.csv").write_text(
            "sample_id,ga_days,landmark_id,x_mm,y_mm,z_mm,present\n"
            "a,200,p,0,0,0,1\na,200,q,10,0,0,1\na,200,r,0,10,0,1\na,200,s,0,0,10,1\n"
            "b,201,p,1,1,1,1\nb,201,q,21,1,1,1\nb,201,r,1,11,1,1\nb,201,s,1,1,6,1\n"
        )
        code = main(["procrustes", "--landmarks", str(tmp_path / "lm.csv"), "--out", str(tmp_path / "sol.json")])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["landmark_ids"] == ["p", "q", "r", "s"]
        assert result["objective"] < 1e-8
        assert json.loads((tmp_path / "sol.json").read_text()) == result

    def test_atlas_average(self, tmp_path, capsys, rng):
        meta = GridMeta((6, 4, 4))
        for i in range(2):
            write_volume(ScalarVolume(meta, rng.normal(size=meta.dims)), tmp_path / f"v{i}.json")
        manifest = [{"image": "v0.json", "ga_days": 199.0}, {"image": "v1.json", "ga_days": 202.0}]
        (tmp_path / "avg.json").write_text(json.dumps(manifest))
        code = main(["atlas-average", "--manifest", str(tmp_path / "avg.json"), "--ga-target", "200",
                     "--out", str(tmp_path / "mean.json")])
        assert code == 0
        average = read_volume(tmp_path / "mean.json").data
        np.testing.assert_array_equal(average, average[::-1])

    def test_atlas_average_partial_masks(self, tmp_path, capsys, rng):
        meta = GridMeta((4, 4, 4))
        write_volume(ScalarVolume(meta, rng.normal(size=meta.dims)), tmp_path / "v.json")
        write_volume(MaskVolume(meta, np.ones(meta.dims)), tmp_path / "m.json")
        manifest = [{"image": "v.json", "ga_days": 200.0, "mask": "m.json"}, {"image": "v.json", "ga_days": 200.0}]
        (tmp_path / "avg.json").write_text(json.dumps(manifest))
        code = main(["atlas-average", "--manifest", str(tmp_path / "avg.json"), "--ga-target", "200",
                     "--out", str(tmp_path / "mean.json")])
        assert code == 1

    def test_fallback_fuse(self, tmp_path, capsys, rng):
        meta = GridMeta((6, 6, 6))
        items = []
        for i, ga in enumerate((24, 25, 29)):
            write_volume(ScalarVolume(meta, rng.normal(size=meta.dims)), tmp_path / f"img{i}.json")
            write_volume(ProbabilityVolume(meta, random_probs(rng, meta.dims, 3)), tmp_path / f"p{i}.json")
            write_volume(ScalarVolume(meta, rng.normal(size=meta.dims + (3,))), tmp_path / f"d{i}.json")
            items.append({"id": f"at{ga}", "ga_days": ga * 7, "condition": "spina_bifida",
                          "image": f"img{i}.json", "probs": f"p{i}.json", "displacement": f"d{i}.json"})
        (tmp_path / "atlases.json").write_text(json.dumps(items))
        write_volume(ScalarVolume(meta, rng.normal(size=meta.dims)), tmp_path / "subject.json")
        argv = ["fallback-fuse", "--manifest", str(tmp_path / "atlases.json"), "--image",
                str(tmp_path / "subject.json"), "--ga-weeks", "25", "--out", str(tmp_path / "fb.json")]
        assert main(argv + ["--condition", "spina_bifida"]) == 0
        assert json.loads(capsys.readouterr().out)["atlases"] == ["at24", "at25"]
        assert read_volume(tmp_path / "fb.json").K == 3
        assert main(argv + ["--condition", "neurotypical"]) == 1

    def test_fit_gmm(self, tmp_path, capsys, rng):
        meta = GridMeta((8, 8, 8))
        data = np.where(rng.random(meta.dims) < 0.5, 0.0, 10.0) + rng.normal(0.0, 1.0, meta.dims)
        write_volume(ScalarVolume(meta, data), tmp_path / "img.json")
        assert main(["fit-gmm", "--image", str(tmp_path / "img.json")]) == 0
        gmm = json.loads(capsys.readouterr().out)
        assert gmm["mu_low"] == pytest.approx(0.0, abs=0.3)
        assert gmm["mu_high"] == pytest.approx(10.0, abs=0.3)

    def test_tune_margins(self, tmp_path, capsys):
        meta = GridMeta((12, 4, 4))
        cases = []
        for i, (condition, shift) in enumerate([("neurotypical", 1), ("neurotypical", 2), ("spina_bifida", 4)]):
            write_volume(box_mask(meta, (0, 0, 0), (3, 4, 4)), tmp_path / f"pred{i}.json")
            write_volume(box_mask(meta, (0, 0, 0), (3 + shift, 4, 4)), tmp_path / f"gt{i}.json")
            cases.append({"class": "wm", "condition": condition, "pred": f"pred{i}.json", "gt": f"gt{i}.json"})
        (tmp_path / "cases.json").write_text(json.dumps(cases))
        code = main(["tune-margins", "--cases", str(tmp_path / "cases.json"), "--out", str(tmp_path / "t.json")])
        assert code == 0
        table = rows(capsys.readouterr().out)
        assert table[0] == ["class", "condition", "eta_mm", "n_pairs"]
        assert [r[1] for r in table[1:]] == ["neurotypical", "spina_bifida"]
        assert float(table[2][2]) > float(table[1][2])
        assert (tmp_path / "t.json").exists()
