import json

import numpy as np
import pytest

from wmbo.cli.artifacts import read_pgm, write_csv, write_pgm
from wmbo.cli.handlers import CommandHandlers
from wmbo.core.config import RunConfig
from wmbo.main import main
from wmbo.models.fields import IndicatorField


def _run(tmp_path, *argv):
    return main(list(argv) + ["-o", str(tmp_path), "--log-level", "WARNING"])


def test_kernel_table(tmp_path):
    assert _run(tmp_path, "kernel-table", "--rmax", "2", "--step", "0.5") == 0
    raw = (tmp_path / "kernel_table.csv").read_bytes()
    lines = raw.decode("utf-8").split("\r\n")
    assert lines[0] == "r,phi,psi"
    assert len([line for line in lines[1:] if line]) == 5
    assert lines[1].startswith("0.0,")
    summary = json.loads((tmp_path / "kernel_table.json").read_text(encoding="utf-8"))
    assert 3.453 < summary["zeros"]["pairs"][0]["r_plus"] < 3.454
    assert (tmp_path / "manifest.json").exists()


def test_evolve_snapshots_and_determinism(tmp_path):
    args = ["evolve", "--shape", "band:y,0.25", "--n", "64", "--h", "1e-6", "--steps", "2", "--snapshot-every", "1"]
    first, second = tmp_path / "a", tmp_path / "b"
    assert _run(first, *args) == 0
    assert _run(second, *args) == 0
    snapshots = sorted(p.name for p in first.glob("snapshot_*.pgm"))
    assert snapshots == ["snapshot_00000.pgm", "snapshot_00001.pgm", "snapshot_00002.pgm"]
    for name in snapshots + ["trajectory.csv", "trajectory.json"]:
        assert (first / name).read_bytes() == (second / name).read_bytes()
    rows = (first / "trajectory.csv").read_text(encoding="utf-8").splitlines()
    assert rows[0] == "k,t,area,components,energy,max_disp,status"
    assert len(rows) == 4
    assert rows[-1].endswith(",ok")


def test_rerun_from_manifest(tmp_path):
    out = tmp_path / "run"
    assert _run(out, "evolve", "--shape", "band:y,0.25", "--n", "64", "--h", "1e-6", "--steps", "2") == 0
    before = (out / "trajectory.csv").read_bytes()
    replay = tmp_path / "replay"
    assert _run(replay, "evolve", "--config", str(out / "manifest.json")) == 0
    assert (replay / "trajectory.csv").read_bytes() == before


def test_shape_preview(tmp_path):
    assert _run(tmp_path, "shape-preview", "--shape", "circle:0.25", "--n", "128") == 0
    assert (tmp_path / "shape.svg").read_text(encoding="utf-8").lstrip().startswith("<?xml")
    header = (tmp_path / "curve_0.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "s,x,y,kappa,kappa_ss,gradE"
    pixels = read_pgm(tmp_path / "shape.pgm")
    assert pixels.shape == (128, 128)
    assert set(np.unique(pixels)) == {0, 255}


def test_shape_preview_of_rose(tmp_path):
    assert _run(tmp_path, "shape-preview", "--shape", "rose", "--L", "2.5", "--n", "256") == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["result"]["geometry_errors"] == []
    assert manifest["result"]["energy"] > 0
    assert (tmp_path / "curve_0.csv").exists()


def test_expansion_command(tmp_path):
    argv = ["expansion", "--shape", "circle:0.2", "--n", "512", "--t", "1e-10,4e-10,1.6e-9,6.4e-9"]
    assert _run(tmp_path, *argv) == 0
    summary = json.loads((tmp_path / "expansion.json").read_text(encoding="utf-8"))
    assert summary["cancellation_ratio"] < 0.05


def test_usage_errors(tmp_path, capsys):
    assert _run(tmp_path, "evolve", "--n", "100") == 2
    assert _run(tmp_path, "converge-circle", "--n", "64") == 2
    assert _run(tmp_path, "evolve", "--shape", "ellipse:1") == 2
    with pytest.raises(SystemExit) as excinfo:
        main(["evolve", "--colour", "red"])
    assert excinfo.value.code == 2


def test_regime_failure_exit_code(tmp_path):
    assert _run(tmp_path, "velocity", "--shape", "circle:0.25", "--n", "128", "--h", "1e-4") == 1


def test_handler_result_shape(tmp_path):
    config = RunConfig(command="kernel-table", r_max=1.0, r_step=0.25, output_dir=str(tmp_path))
    result = CommandHandlers(config).run()
    assert result["success"] is True
    assert result["exit_code"] == 0
    assert {p.name for p in result["outputs"]} == {"kernel_table.csv", "kernel_table.json", "manifest.json"}


def test_pgm_orientation(tmp_path, small_grid):
    values = np.zeros((128, 128), dtype=np.uint8)
    values[0, :] = 1
    path = write_pgm(tmp_path / "bottom.pgm", IndicatorField(grid=small_grid, values=values))
    assert path.read_bytes().startswith(b"P5\n128 128\n255\n")
    pixels = read_pgm(path)
    assert np.all(pixels[-1] == 255)
    assert np.all(pixels[:-1] == 0)


def test_csv_formatting(tmp_path):
    path = write_csv(tmp_path / "t.csv", ("a", "b", "c"), [(0.1, None, float("nan")), (1, True, "x")])
    assert path.read_bytes() == b"a,b,c\r\n0.1,,\r\n1,true,x\r\n"
