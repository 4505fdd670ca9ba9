"""Tests for environment-driven process settings."""

from src.config.settings import Settings


def test_settings_from_environment(monkeypatch):
    """Test environment variables override defaults."""
    monkeypatch.setenv("LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("SNAPDIFF_THREADS", "4")
    monkeypatch.setenv("SNAPDIFF_SERIAL", "false")
    monkeypatch.setenv("SNAPDIFF_OUTPUT_DIR", "/tmp/snapdiff-runs")
    settings = Settings()
    assert settings.log_level == "DEBUG"
    assert settings.threads == 4
    assert settings.serial is False
    assert settings.output_dir == "/tmp/snapdiff-runs"


def test_settings_test_environment():
    """Test the suite runs single-threaded and serial."""
    settings = Settings()
    assert settings.serial is True
    assert settings.threads == 1
