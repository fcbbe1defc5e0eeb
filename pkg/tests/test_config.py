"""
Tests for pflat.config module.
"""

import logging
from unittest.mock import patch

import pytest
import yaml


class TestLoadConfig:
    """Tests for load_config function."""

    def test_returns_defaults_when_no_config_file(self, temp_dir):
        """Should return the built-in defaults when config.yaml doesn't exist."""
        import pflat.config

        with patch.object(pflat.config, "CONFIG_PATH", temp_dir / "nonexistent.yaml"):
            result = pflat.config.load_config()

        assert result == pflat.config.DEFAULTS

    def test_loads_config_from_yaml(self, temp_dir):
        """Should override defaults with values from the YAML file."""
        import pflat.config

        config_path = temp_dir / "config.yaml"
        with open(config_path, "w") as f:
            yaml.dump({"tolerance": 1e-8, "max_iterations": 12}, f)

        with patch.object(pflat.config, "CONFIG_PATH", config_path):
            result = pflat.config.load_config()

        assert result["tolerance"] == 1e-8
        assert result["max_iterations"] == 12
        assert result["fd_step"] == pflat.config.DEFAULTS["fd_step"]

    def test_ignores_unknown_keys(self, temp_dir):
        """Should drop keys that are not known settings."""
        import pflat.config

        config_path = temp_dir / "config.yaml"
        config_path.write_text("model: something\nmonotone_window: 5\n")

        with patch.object(pflat.config, "CONFIG_PATH", config_path):
            result = pflat.config.load_config()

        assert "model" not in result
        assert result["monotone_window"] == 5

    def test_falls_back_on_bad_values(self, temp_dir):
        """Should keep the default when a value has the wrong type."""
        import pflat.config

        config_path = temp_dir / "config.yaml"
        config_path.write_text("max_iterations: lots\n")

        with patch.object(pflat.config, "CONFIG_PATH", config_path):
            result = pflat.config.load_config()

        assert result["max_iterations"] == pflat.config.DEFAULTS["max_iterations"]

    def test_handles_empty_file(self, temp_dir):
        """Should return defaults for an empty YAML file."""
        import pflat.config

        config_path = temp_dir / "config.yaml"
        config_path.write_text("")

        with patch.object(pflat.config, "CONFIG_PATH", config_path):
            result = pflat.config.load_config()

        assert result == pflat.config.DEFAULTS


class TestGetSetting:
    """Tests for get_setting function."""

    def test_returns_single_value(self, temp_dir):
        """Should return one configured value."""
        import pflat.config

        with patch.object(pflat.config, "CONFIG_PATH", temp_dir / "nonexistent.yaml"):
            assert pflat.config.get_setting("second_fd_step") == 1e-3

    def test_raises_for_unknown_setting(self):
        """Should raise KeyError for names outside DEFAULTS."""
        from pflat.config import get_setting

        with pytest.raises(KeyError, match="Unknown setting"):
            get_setting("temperature")


class TestGetThreadCount:
    """Tests for get_thread_count function."""

    def test_defaults_to_one(self, monkeypatch):
        """Should return 1 when PFLAT_THREADS is unset."""
        monkeypatch.delenv("PFLAT_THREADS", raising=False)
        from pflat.config import get_thread_count

        assert get_thread_count() == 1

    def test_reads_environment(self, monkeypatch):
        """Should return the configured worker count."""
        monkeypatch.setenv("PFLAT_THREADS", "6")
        from pflat.config import get_thread_count

        assert get_thread_count() == 6

    @pytest.mark.parametrize("raw", ["zero", "0", "-3"])
    def test_rejects_invalid_values(self, monkeypatch, raw):
        """Should fall back to a single worker for invalid counts."""
        monkeypatch.setenv("PFLAT_THREADS", raw)
        from pflat.config import get_thread_count

        assert get_thread_count() == 1


class TestLogging:
    """Tests for get_log_level and configure_logging."""

    def test_environment_overrides_config(self, monkeypatch):
        """Should prefer PFLAT_LOG_LEVEL over config.yaml."""
        monkeypatch.setenv("PFLAT_LOG_LEVEL", "debug")
        from pflat.config import get_log_level

        assert get_log_level() == "DEBUG"

    def test_unknown_level_falls_back(self, monkeypatch):
        """Should use WARNING for unrecognized level names."""
        monkeypatch.setenv("PFLAT_LOG_LEVEL", "chatty")
        from pflat.config import get_log_level

        assert get_log_level() == "WARNING"

    def test_verbosity_lowers_level(self, monkeypatch):
        """Should lower the root level one step per -v flag."""
        monkeypatch.setenv("PFLAT_LOG_LEVEL", "WARNING")
        from pflat.config import configure_logging

        with patch("pflat.config.logging.basicConfig") as mock_basic:
            configure_logging(1)

        assert mock_basic.call_args.kwargs["level"] == logging.INFO

    def test_verbosity_stops_at_debug(self, monkeypatch):
        """Should never go below DEBUG."""
        monkeypatch.setenv("PFLAT_LOG_LEVEL", "INFO")
        from pflat.config import configure_logging

        with patch("pflat.config.logging.basicConfig") as mock_basic:
            configure_logging(5)

        assert mock_basic.call_args.kwargs["level"] == logging.DEBUG
