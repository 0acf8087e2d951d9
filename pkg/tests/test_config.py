import numpy as np
import pytest

from rabidimer.config import (DEFAULTS, OUTPUT_ENV, ConfigError, expand_sweep, parse_config,
                              parse_value)


def test_empty_config_gives_defaults(tmp_path):
    cfg = parse_config(None, env={})
    assert cfg.model.g == 0.3 and cfg.model.omega_r == 10.0
    assert cfg.model.drive_L.Omega == 0.05
    assert cfg.initial.M == 6 and cfg.initial.n_photons == 20.0
    assert all(v == "default" for v in cfg.provenance.values())
    assert set(cfg.values) == set(DEFAULTS)


def test_constraint_named():
    with pytest.raises(ConfigError, match="M ≥ 1"):
        parse_config(None, ["init.M=0"], env={})
    with pytest.raises(ConfigError, match="dt > 0"):
        parse_config(None, ["propagation.dt=-1"], env={})


def test_unknown_key_is_error(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("model.gg = 0.3\n")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(f, env={})
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "missing.txt", env={})


def test_sweep_over_phase(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("# Fig. 3 phases\ndrive.L.F = 20\nsweep.drive.L.Phi = [pi/2, pi/6, 2*pi/3]\n")
    cfg = parse_config(f, env={})
    pts = expand_sweep(cfg)
    assert len(pts) == 3
    assert [p.model.drive_L.Phi for p in pts] == pytest.approx([np.pi / 2, np.pi / 6, 2 * np.pi / 3])
    assert [p.label for p in pts] == ["point000", "point001", "point002"]
    assert all(p.provenance["drive.L.Phi"] == "sweep" for p in pts)
    assert pts[0].provenance["drive.L.F"] == str(f)


def test_cartesian_sweep():
    cfg = parse_config(None, ["sweep.model.alpha=[0.1, 0.2, 0.4]", "sweep.model.omega_ph=[0.05,0.09]"], env={})
    assert len(expand_sweep(cfg)) == 6


def test_flag_overrides_file_and_env(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("model.g = 0.2\nrun.output_dir = from_file\n")
    cfg = parse_config(f, ["model.g=0.25"], env={OUTPUT_ENV: "/tmp/envdir"})
    assert cfg.model.g == 0.25 and cfg.provenance["model.g"] == "flag"
    assert str(cfg.output_dir) == "/tmp/envdir" and cfg.provenance["run.output_dir"] == "env"


def test_parse_value():
    assert parse_value("pi/2") == pytest.approx(np.pi / 2)
    assert parse_value("-3e-2") == -0.03
    assert parse_value("[1, 2]") == [1, 2]
    assert parse_value("down-down") == "down-down"


def test_type_and_list_errors():
    with pytest.raises(ConfigError):
        parse_config(None, ["init.M=2.5"], env={})
    with pytest.raises(ConfigError):
        parse_config(None, ["model.g=[0.1,0.2]"], env={})
    with pytest.raises(ConfigError):
        parse_config(None, ["model.g"], env={})


def test_manifest_lists_every_parameter():
    cfg = parse_config(None, ["sweep.model.alpha=[0.1,0.2]"], env={})
    text = "\n".join(cfg.manifest_lines())
    for key in DEFAULTS:
        assert key in text
    assert "sweep.model.alpha" in text
