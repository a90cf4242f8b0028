import pytest
import yaml

from src.core.errors import ParameterError
from src.utils.config import ConfigManager


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    for var in ("EPSW_ECON_TOL", "EPSW_GRID_SIZE", "EPSW_ORACLE_BINS"):
        monkeypatch.delenv(var, raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


class TestLoading:
    def test_defaults_without_any_file(self, clean_env):
        manager = ConfigManager(config_dir=str(clean_env / "none"))
        manager.load_config()
        assert manager.source is None
        assert manager.solver.econ_tol == 1e-7
        assert manager.solver.grid_size == 2049
        assert manager.oracle.bins == 64

    def test_file_values(self, clean_env):
        path = write_yaml(clean_env / "c.yaml", {"solver": {"grid_size": 513, "econ_tol": "1e-8"}})
        manager = ConfigManager(config_dir=str(clean_env))
        manager.load_config(path)
        assert manager.solver.grid_size == 513
        assert manager.solver.econ_tol == 1e-8
        assert str(manager.source) == path

    def test_user_config_dir_is_searched(self, clean_env):
        write_yaml(clean_env / "config.yaml", {"oracle": {"bins": 32}})
        manager = ConfigManager(config_dir=str(clean_env))
        manager.load_config()
        assert manager.oracle.bins == 32

    def test_unknown_keys_are_ignored(self, clean_env):
        path = write_yaml(clean_env / "c.yaml", {"solver": {"colour": "blue"}, "ui": {"theme": "x"}})
        manager = ConfigManager(config_dir=str(clean_env))
        manager.load_config(path)
        assert not hasattr(manager.solver, "colour")

    def test_non_numeric_value(self, clean_env):
        path = write_yaml(clean_env / "c.yaml", {"solver": {"grid_size": "many"}})
        with pytest.raises(ParameterError):
            ConfigManager(config_dir=str(clean_env)).load_config(path)

    def test_broken_yaml(self, clean_env):
        path = clean_env / "c.yaml"
        path.write_text("solver: [unclosed\n")
        with pytest.raises(ParameterError):
            ConfigManager(config_dir=str(clean_env)).load_config(str(path))

    def test_env_var_substitution(self, clean_env, monkeypatch):
        monkeypatch.setenv("EPSW_TEST_LOGS", "/var/tmp/epsw")
        path = write_yaml(clean_env / "c.yaml", {"logging": {"log_file": "${EPSW_TEST_LOGS}/app.log"}})
        manager = ConfigManager(config_dir=str(clean_env))
        manager.load_config(path)
        assert str(manager.log_path) == "/var/tmp/epsw/app.log"


class TestEnvironmentOverrides:
    def test_override_beats_file(self, clean_env, monkeypatch):
        path = write_yaml(clean_env / "c.yaml", {"solver": {"econ_tol": 1e-6}})
        monkeypatch.setenv("EPSW_ECON_TOL", "1e-9")
        monkeypatch.setenv("EPSW_GRID_SIZE", "1025")
        monkeypatch.setenv("EPSW_ORACLE_BINS", "128")
        manager = ConfigManager(config_dir=str(clean_env))
        manager.load_config(path)
        assert manager.solver.econ_tol == 1e-9
        assert manager.solver.grid_size == 1025
        assert manager.oracle.bins == 128

    def test_bad_override(self, clean_env, monkeypatch):
        monkeypatch.setenv("EPSW_GRID_SIZE", "big")
        with pytest.raises(ParameterError):
            ConfigManager(config_dir=str(clean_env)).load_config()


def test_tolerance_set_and_save_round_trip(clean_env):
    manager = ConfigManager(config_dir=str(clean_env))
    manager.load_config()
    manager.solver.econ_tol = 1e-8
    manager.save_config()
    assert manager.tolerance_set()["econ_tol"] == 1e-8

    again = ConfigManager(config_dir=str(clean_env))
    again.load_config()
    assert again.solver.econ_tol == 1e-8
    assert again.source == clean_env / "config.yaml"


def test_default_dir_follows_xdg(monkeypatch, tmp_path):
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path))
    assert ConfigManager().config_dir == tmp_path / "epswcore"
