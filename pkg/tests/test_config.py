import pytest

from wmbo.core.config import PRESETS, ConfigManager, RunConfig, normalize_key
from wmbo.core.errors import GridError
from wmbo.models.fields import DEFAULT_SCALE, SchemeKind


def test_key_normalisation():
    assert normalize_key("L") == "side_length"
    assert normalize_key("--t-final") == "t_final"
    assert normalize_key("lambda") == "lam"
    assert normalize_key("snapshot-every") == "snapshot_every"
    assert normalize_key("snapshot_every") == "snapshot_every"
    assert normalize_key("h") == "h_values"


def test_defaults():
    config = RunConfig(command="evolve")
    assert config.grid().n == 256
    params = config.params()
    assert params.h == 1e-5
    assert params.a == DEFAULT_SCALE
    assert params.scheme is SchemeKind.THREE_SCALE
    assert config.params(h=2e-5).h == 2e-5


def test_from_dict_coerces_strings():
    config = RunConfig.from_dict({"command": "converge-circle", "h": "1.6e-5,8e-6", "n": "512", "emit-svg": "yes", "jobs": "none"})
    assert config.h_values == [1.6e-5, 8e-6]
    assert config.n == 512
    assert config.emit_svg is True
    assert config.jobs is None


def test_invalid_values():
    with pytest.raises(ValueError):
        RunConfig(command="render")
    with pytest.raises(ValueError):
        RunConfig.from_dict({"command": "evolve", "colour": "red"})
    with pytest.raises(ValueError):
        RunConfig(command="evolve", h_values=[-1.0])
    with pytest.raises(GridError):
        RunConfig(command="evolve", n=100).grid()


def test_flat_file_parsing():
    data = ConfigManager.parse_flat("# cassini run\nshape = cassini:0.6825,0.678\nL = 5  # domain\n\nsnapshot-every=1\n")
    assert data == {"shape": "cassini:0.6825,0.678", "side_length": "5", "snapshot_every": "1"}
    with pytest.raises(ValueError):
        ConfigManager.parse_flat("just a line")


def test_precedence(tmp_path, monkeypatch):
    monkeypatch.delenv("WMBO_OUT", raising=False)
    config_file = tmp_path / "run.cfg"
    config_file.write_text("n = 512\nh = 0.01\n", encoding="utf-8")
    config = ConfigManager(config_file).resolve("evolve", preset="cassini", overrides={"h": "0.002", "steps": None})
    assert config.side_length == PRESETS["cassini"]["side_length"]
    assert config.shape == "cassini:0.6825,0.678"
    assert config.n == 512
    assert config.h_values == [0.002]
    assert config.steps == 1
    assert config.output_dir == "output"


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("WMBO_OUT", str(tmp_path / "runs"))
    assert ConfigManager().resolve("kernel-verify").output_dir == str(tmp_path / "runs")


def test_unknown_preset_and_missing_file(tmp_path):
    with pytest.raises(ValueError):
        ConfigManager().resolve("evolve", preset="ellipse")
    with pytest.raises(ValueError):
        ConfigManager(tmp_path / "missing.cfg").resolve("evolve")


def test_manifest_round_trip(tmp_path):
    config = ConfigManager().resolve("evolve", preset="rose-caption", overrides={"output_dir": str(tmp_path), "steps": 4})
    manifest = ConfigManager().save_manifest(config, [tmp_path / "b.pgm", tmp_path / "a.csv"], {"halted": None})
    reloaded = ConfigManager(manifest).resolve("evolve")
    assert reloaded.to_dict() == config.to_dict()
    assert reloaded.h_values == [0.0003]
    assert manifest.read_text(encoding="utf-8") == ConfigManager().save_manifest(
        config, [tmp_path / "b.pgm", tmp_path / "a.csv"], {"halted": None}
    ).read_text(encoding="utf-8")
