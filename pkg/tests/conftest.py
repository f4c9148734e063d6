# tests/conftest.py
import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures" / "data"


@pytest.fixture
def fixture_path():
    """Path of a JSON file under tests/fixtures/data"""

    def _path(name: str) -> str:
        return str(FIXTURES / name)

    return _path


@pytest.fixture
def sample_config_path(tmp_path):
    """Fixture for a valid configuration writing into tmp_path"""
    config_data = {
        "command": "verify-bubble",
        "dimensions": [[3, 1]],
        "tol": 1e-8,
        "sweep": {"mu": [0.5, 1.0]},
        "out_dir": str(tmp_path / "out"),
        "csv": True,
        "svg": False,
        "xlsx": False,
        "seed": 7,
        "workers": 1,
        "timings": False,
    }
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps(config_data))
    return str(config_file)


@pytest.fixture
def invalid_config_path(tmp_path):
    """Fixture for a configuration with a pair violating 2k < n"""
    config_data = {
        "command": "verify-bubble",
        "dimensions": [[4, 2]],
        "out_dir": str(tmp_path / "out"),
    }
    config_file = tmp_path / "invalid_config.json"
    config_file.write_text(json.dumps(config_data))
    return str(config_file)


@pytest.fixture
def test_env_vars(monkeypatch, tmp_path):
    """Fixture for environment variables"""
    test_vars = {
        "POLYLAB_OUT_DIR": str(tmp_path / "env_out"),
        "POLYLAB_WORKERS": "3",
        "POLYLAB_LOG_DIR": str(tmp_path / "env_logs"),
    }
    for key, value in test_vars.items():
        monkeypatch.setenv(key, value)
    return test_vars


@pytest.fixture
def clean_env(monkeypatch):
    """Remove polylab environment overrides"""
    for key in ("POLYLAB_OUT_DIR", "POLYLAB_WORKERS", "POLYLAB_LOG_DIR"):
        monkeypatch.delenv(key, raising=False)
