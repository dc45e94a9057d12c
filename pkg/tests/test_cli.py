import json

import numpy as np
import pytest
from PIL import Image

from contourkit.annotate import LabelVolume, load_mask, save_mask
from contourkit.cli import main
from contourkit.volume import load_volume


def run(*argv):
    return main([str(a) for a in argv])


class TestImport:
    def make_slices(self, tmp_path, n=4, size=8, values=None):
        d = tmp_path / "slices"
        d.mkdir()
        for k in range(n):
            arr = np.full((size, size), 40 * (k + 1) if values is None else values[k],
                          dtype=np.uint8)
            Image.fromarray(arr, mode="L").save(d / f"slice_{k:03d}.png")
        return d

    def test_stack_dims(self, tmp_path, capsys):
        d = self.make_slices(tmp_path)
        assert run("import", d, "--out", tmp_path / "vol", "--json") == 0
        info = json.loads(capsys.readouterr().out)
        assert info["dims"] == [8, 8, 4]
        vol = load_volume(tmp_path / "vol")
        assert vol.dims == (8, 8, 4)

    def test_mixed_sizes_error(self, tmp_path, capsys):
        d = self.make_slices(tmp_path)
        Image.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="L").save(d / "zzz.png")
        assert run("import", d, "--out", tmp_path / "vol") == 2

    def test_gradient_values(self, tmp_path):
        d = self.make_slices(tmp_path, n=3, values=[0, 100, 200])
        run("import", d, "--out", tmp_path / "vol", "--spacing", "1,1,2.5")
        vol = load_volume(tmp_path / "vol")
        assert vol.spacing == (1.0, 1.0, 2.5)
        assert vol.densities[0, 0, 0] == 0.0
        assert vol.densities[0, 0, 1] == pytest.approx(0.5)
        assert vol.densities[0, 0, 2] == 1.0

    def test_usage_error_exit_1(self, capsys):
        with pytest.raises(SystemExit) as e:
            run("import")  # missing required --out
        assert e.value.code == 1


class TestPhantomAndScore:
    def test_identical_masks_print_1(self, tmp_path, capsys):
        run("phantom", "--kind", "cube", "--out", tmp_path / "p")
        capsys.readouterr()
        code = run("score", "--mask", tmp_path / "p" / "reference.mask.json",
                   "--against", tmp_path / "p" / "reference.mask.json")
        assert code == 0
        assert capsys.readouterr().out.strip() == "1.0000"

    def test_score_json(self, tmp_path, capsys):
        run("phantom", "--kind", "cube", "--out", tmp_path / "p")
        capsys.readouterr()
        run("score", "--mask", tmp_path / "p" / "user.mask.json",
            "--against", tmp_path / "p" / "reference.mask.json", "--json")
        assert json.loads(capsys.readouterr().out) == {"dsc": 0.0}

    def test_ellipsoid_scripts_reach_thresholds(self, tmp_path, capsys):
        run("phantom", "--kind", "ellipsoid", "--out", tmp_path / "e",
            "--dims", "48,48,36", "--scripts")
        capsys.readouterr()
        # mixed workflow: sphere paint + interp + disc refine
        run("paint", "--volume", tmp_path / "e" / "volume.json",
            "--mask", tmp_path / "e" / "user.mask.json",
            "--script", tmp_path / "e" / "mixed_workflow.json")
        capsys.readouterr()
        run("score", "--mask", tmp_path / "e" / "user.mask.json",
            "--against", tmp_path / "e" / "reference.mask.json", "--json")
        got = json.loads(capsys.readouterr().out)["dsc"]
        assert got >= 0.95

    def test_paint_sphere_phantom_vs_analytic(self, tmp_path, capsys):
        run("phantom", "--kind", "ellipsoid", "--out", tmp_path / "s",
            "--dims", "32,32,24")
        script = [{"tool": "sphere3d", "mode": "paint", "radius_mm": 8.0,
                   "path": [[15.5, 15.5, 11.5]], "t": 0}]
        (tmp_path / "script.json").write_text(json.dumps(script))
        run("paint", "--volume", tmp_path / "s" / "volume.json",
            "--mask", tmp_path / "mask.json", "--script", tmp_path / "script.json")
        mask = load_mask(tmp_path / "mask.json")
        expect = LabelVolume(mask.dims)
        xs = np.arange(32)[:, None, None]
        ys = np.arange(32)[None, :, None]
        zs = np.arange(24)[None, None, :]
        expect.bits[:] = ((xs - 15.5) ** 2 + (ys - 15.5) ** 2 + (zs - 11.5) ** 2) <= 64.0
        assert np.array_equal(mask.bits, expect.bits)


class TestInterpCommand:
    def test_in_place_and_new_file(self, tmp_path, capsys):
        m = LabelVolume((16, 16, 9))
        yy, xx = np.mgrid[0:16, 0:16]
        disc = ((xx - 8) ** 2 + (yy - 8) ** 2) <= 16
        m.bits[:, :, 0] = disc
        m.bits[:, :, 8] = disc
        save_mask(m, tmp_path / "m.mask.json")
        code = run("interp", "--mask", tmp_path / "m.mask.json",
                   "--axis", "z", "--keys", "0,8")
        assert code == 0
        out = load_mask(tmp_path / "m.mask.json")
        assert np.array_equal(out.bits[:, :, 4], m.bits[:, :, 0])

    def test_bad_keys_exit_2(self, tmp_path, capsys):
        m = LabelVolume((4, 4, 4))
        save_mask(m, tmp_path / "m.mask.json")
        assert run("interp", "--mask", tmp_path / "m.mask.json",
                   "--axis", "z", "--keys", "3") == 2


class TestRenderCommand:
    def test_reproducible_png(self, tmp_path, capsys):
        run("phantom", "--kind", "cube", "--out", tmp_path / "c", "--dims", "16")
        args = ("render", "--volume", tmp_path / "c" / "volume.json",
                "--tf", tmp_path / "c" / "tf.json",
                "--pos", "7.5,7.5,40", "--look", "7.5,7.5,7.5",
                "--up", "0,1,0", "--size", "24x24", "--width", "24")
        assert run(*args, "--out", tmp_path / "a.png") == 0
        assert run(*args, "--out", tmp_path / "b.png", "--threads", "4") == 0
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()

    def test_slice_export(self, tmp_path, capsys):
        run("phantom", "--kind", "cube", "--out", tmp_path / "c", "--dims", "12")
        code = run("slice", "--volume", tmp_path / "c" / "volume.json",
                   "--mask", tmp_path / "c" / "reference.mask.json",
                   "--axis", "transverse", "--index", "6",
                   "--out", tmp_path / "s.png")
        assert code == 0
        img = np.asarray(Image.open(tmp_path / "s.png"))
        assert img.shape == (12, 12, 4)
        # cube interior tinted red-ish vs black exterior
        assert img[6, 6, 0] > img[0, 0, 0]


class TestGazeCommand:
    def make_session(self, tmp_path):
        lines = [json.dumps({"t": 0, "kind": "anchor"})]
        for i in range(200):
            lines.append(json.dumps(
                {"t": 10 + i * 400.0, "kind": "gaze", "dir": [0, 0, 1],
                 "hit": "tablet" if i % 2 == 0 else "volume"}))
        lines.append(json.dumps({"t": 2000, "kind": "stroke_start"}))
        lines.append(json.dumps({"t": 80_000, "kind": "end"}))
        p = tmp_path / "sess.jsonl"
        p.write_text("\n".join(lines) + "\n")
        return p

    def test_csv_output(self, tmp_path, capsys):
        p = self.make_session(tmp_path)
        assert run("gaze", "--session", p, "--out", tmp_path / "att.csv") == 0
        lines = (tmp_path / "att.csv").read_text().splitlines()
        assert lines[0] == "progress,tabletPct,volumePct"
        assert len(lines) == 101

    def test_json_summary(self, tmp_path, capsys):
        p = self.make_session(tmp_path)
        run("gaze", "--session", p, "--json")
        obj = json.loads(capsys.readouterr().out)
        assert obj["complete"] is True
        assert obj["gaze_samples"] == 200

    def test_contours_command(self, tmp_path, capsys):
        m = LabelVolume((8, 8, 3))
        m.bits[3:5, 3:5, 1] = True
        save_mask(m, tmp_path / "m.mask.json")
        run("contours", "--mask", tmp_path / "m.mask.json",
            "--axis", "transverse", "--out", tmp_path / "c.json")
        capsys.readouterr()
        obj = json.loads((tmp_path / "c.json").read_text())
        assert obj["slices"][0]["slice"] == 1
