import configparser

import pytest

from graspbench.config import (
    DEFAULT_SETTINGS,
    default_settings,
    load_settings,
    require_fraction,
    require_positive,
    settings_from_mapping,
    write_json_atomic,
    write_settings,
)
from graspbench.errors import ConfigError
from graspbench.platform import CONFIG_ENV, log_path, settings_path, xdg_config_dir


def test_defaults_cover_every_section():
    s = default_settings()
    for section, keys in DEFAULT_SETTINGS.items():
        for key in keys:
            assert s.get(section, key) == DEFAULT_SETTINGS[section][key]
    assert s.getfloat("physics", "dt") == pytest.approx(0.002)
    assert s.getint("grasp", "rolls") == 8


def test_missing_implicit_file_falls_back_to_defaults(isolated_dirs):
    s = load_settings()
    assert s.path == xdg_config_dir() / "settings.ini"
    assert s.getfloat("verify", "closing_force") == 40.0


def test_explicit_missing_path_is_an_error(tmp_path):
    with pytest.raises(ConfigError):
        load_settings(str(tmp_path / "nope.ini"))


def test_user_file_overrides_defaults(tmp_path):
    ini = tmp_path / "s.ini"
    ini.write_text("[physics]\ndt = 0.001\n", encoding="utf-8")
    s = load_settings(str(ini))
    assert s.getfloat("physics", "dt") == 0.001
    # untouched keys keep their defaults
    assert s.getint("physics", "solver_iterations") == 20


def test_env_variable_selects_file(tmp_path, monkeypatch):
    ini = tmp_path / "env.ini"
    ini.write_text("[ik]\nmax_iters = 7\n", encoding="utf-8")
    monkeypatch.setenv(CONFIG_ENV, str(ini))
    assert settings_path() == ini
    assert load_settings().getint("ik", "max_iters") == 7


def test_flag_beats_env(tmp_path, monkeypatch):
    monkeypatch.setenv(CONFIG_ENV, str(tmp_path / "env.ini"))
    assert settings_path(str(tmp_path / "flag.ini")) == tmp_path / "flag.ini"


def test_bad_values_raise_config_error(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[physics]\ndt = fast\nsolver_iterations = nan\n[qa]\nlift_min = inf\n", encoding="utf-8")
    s = load_settings(str(ini))
    with pytest.raises(ConfigError, match="physics.dt"):
        s.getfloat("physics", "dt")
    with pytest.raises(ConfigError):
        s.getint("physics", "solver_iterations")
    with pytest.raises(ConfigError, match="finite"):
        s.getfloat("qa", "lift_min")


def test_malformed_ini_is_config_error(tmp_path):
    ini = tmp_path / "broken.ini"
    ini.write_text("dt = 0.1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_settings(str(ini))


def test_mapping_roundtrip_and_unknown_sections():
    s = settings_from_mapping({"physics": {"dt": 0.004}, "extra": {"k": "v"}})
    assert s.getfloat("physics", "dt") == 0.004
    m = s.as_mapping()
    assert m["extra"] == {"k": "v"}
    assert list(m) == sorted(m)


def test_require_helpers():
    assert require_positive("a", "b", 1.5) == 1.5
    with pytest.raises(ConfigError, match="a.b"):
        require_positive("a", "b", 0.0)
    assert require_fraction("a", "b", 1.0) == 1.0
    for bad in (0.0, 1.01, -0.2):
        with pytest.raises(ConfigError):
            require_fraction("a", "b", bad)


def test_atomic_writers(tmp_path):
    target = tmp_path / "sub" / "out.json"
    write_json_atomic({"b": 1, "a": [1, 2]}, target)
    text = target.read_text(encoding="utf-8")
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]

    ini = write_settings(default_settings(), tmp_path / "conf" / "settings.ini")
    parser = configparser.ConfigParser()
    parser.read(ini, encoding="utf-8")
    assert parser.get("bench", "credible_level") == "0.95"


def test_log_path_under_state_dir(isolated_dirs):
    assert log_path() == isolated_dirs / "state" / "graspbench" / "graspbench.log"
