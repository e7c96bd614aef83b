from pathlib import Path

import pytest

from ..config import Config


def test_config_attribute_types():
    """Test that Config attributes are defined with correct types and constraints"""
    config = Config()

    assert isinstance(config.parallel, int)
    assert isinstance(config.history_factor, int)
    assert config.parallel >= 1
    assert config.history_factor >= 1

    assert isinstance(config.debug, bool)
    assert isinstance(config.is_logged, bool)
    assert isinstance(config.progress, bool)

    assert isinstance(config.base_dir, Path)
    assert isinstance(config.out_dir, Path)
    assert isinstance(config.log_dir, Path)


def test_config_value_constraints():
    """Test that Config values respect their constraints"""
    config = Config()

    with pytest.raises(ValueError, match="parallel must be at least 1"):
        config.parallel = 0

    with pytest.raises(TypeError, match="parallel must be an integer"):
        config.parallel = "2"

    with pytest.raises(TypeError, match="parallel must be an integer"):
        config.parallel = True

    with pytest.raises(ValueError, match="history_factor must be at least 1"):
        config.history_factor = -1

    with pytest.raises(TypeError, match="Debug must be a boolean"):
        config.debug = "yes"

    with pytest.raises(TypeError, match="progress must be a boolean"):
        config.progress = 1

    with pytest.raises(TypeError, match="path must be Path or string"):
        config.out_dir = 123

    with pytest.raises(TypeError, match="path must be Path or string"):
        config.log_dir = 123

    config.parallel = 3
    assert config.parallel == 3


def test_config_env_override(monkeypatch, tmp_base_dir):
    """Test that environment variables properly override default config values"""
    monkeypatch.setenv("HTA_PARALLEL", "3")
    monkeypatch.setenv("HTA_HISTORY_FACTOR", "8")
    monkeypatch.setenv("HTA_DEBUG", "true")
    monkeypatch.setenv("HTA_PROGRESS", "no")
    monkeypatch.setenv("HTA_OUT_DIR", str(tmp_base_dir / "env_runs"))

    config = Config()

    assert config.parallel == 3
    assert config.history_factor == 8
    assert config.debug is True
    assert config.progress is False
    assert config.out_dir == tmp_base_dir / "env_runs"
    assert config.out_dir.exists()


def test_config_env_invalid_value(monkeypatch):
    monkeypatch.setenv("HTA_PARALLEL", "0")
    with pytest.raises(ValueError, match="parallel must be at least 1"):
        Config()


def test_config_directory_creation(tmp_base_dir):
    """Test that Config creates necessary directories"""
    out_dir = tmp_base_dir / "runs"
    log_dir = tmp_base_dir / "log"

    Config(out_dir=out_dir, log_dir=log_dir)

    assert out_dir.exists()
    assert log_dir.exists()


def test_config_relative_paths(tmp_base_dir):
    """Relative paths are resolved against base_dir"""
    config = Config()
    config.base_dir = tmp_base_dir
    config.out_dir = "relative_runs"

    assert config.out_dir == tmp_base_dir / "relative_runs"
    assert config.out_dir.exists()


def test_config_copy_is_independent():
    config = Config()
    other = config.copy()
    other.parallel = config.parallel + 1

    assert other.parallel != config.parallel
