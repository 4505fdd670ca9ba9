"""Tests for metrics, validators and logging helpers."""

import pytest

from src.core.exceptions import UsageError
from src.utils.logging import setup_logging
from src.utils.metrics import CsvWriter, MetricsCollector, read_csv
from src.utils.validators import is_valid_run_name, parse_float_list, parse_int_list, validate_class_id


def test_metrics_collector():
    """Test counters, gauges and smoothed series."""
    metrics = MetricsCollector(smoothing=0.5)
    metrics.increment("steps")
    metrics.increment("steps", 2)
    metrics.gauge("lr", 0.1)
    assert metrics.observe("loss", 4.0) == 4.0
    assert metrics.observe("loss", 2.0) == 3.0
    snapshot = metrics.get_metrics()
    assert snapshot == {"steps": 3, "lr": 0.1, "loss": 2.0, "loss_smoothed": 3.0}
    snapshot["steps"] = 0
    assert metrics.get_metrics()["steps"] == 3


def test_csv_writer_append(tmp_path):
    """Test appending keeps a single header and floats round-trip exactly."""
    path = tmp_path / "out" / "m.csv"
    with CsvWriter(path, ["a", "b"]) as writer:
        writer.write({"a": 1, "b": 0.1 + 0.2})
    with CsvWriter(path, ["a", "b"], append=True) as writer:
        writer.write({"a": 2, "b": 1.0, "ignored": "x"})
    rows = read_csv(path)
    assert [r["a"] for r in rows] == ["1", "2"]
    assert float(rows[0]["b"]) == 0.1 + 0.2


def test_csv_writer_overwrites(tmp_path):
    """Test a fresh writer replaces an existing file."""
    path = tmp_path / "m.csv"
    for value in (1, 2):
        with CsvWriter(path, ["a"]) as writer:
            writer.write({"a": value})
    assert read_csv(path) == [{"a": "2"}]


@pytest.mark.parametrize("name,valid", [("sample_01", True), ("run-a", True), ("../x", False), ("a b", False), ("", False)])
def test_run_names(name, valid):
    """Test output names cannot escape the output directory."""
    assert is_valid_run_name(name) is valid


def test_parse_int_list():
    """Test comma-separated positive integers."""
    assert parse_int_list("1, 4,16") == (1, 4, 16)
    for bad in ("", "1,x", "0,1", "-1", "1.5"):
        with pytest.raises(UsageError):
            parse_int_list(bad, "--T")


def test_parse_float_list():
    """Test comma-separated numbers."""
    assert parse_float_list("0.5,2") == (0.5, 2.0)
    with pytest.raises(UsageError):
        parse_float_list("a")
    with pytest.raises(UsageError):
        parse_float_list(" , ")


def test_validate_class_id():
    """Test class ids run from 0 (null) to n_classes."""
    assert validate_class_id(0, 4) == 0
    assert validate_class_id(4, 4) == 4
    with pytest.raises(UsageError, match="out of range"):
        validate_class_id(5, 4)


def test_setup_logging_returns_logger():
    """Test logging can be reconfigured at a given level."""
    logger = setup_logging(level="ERROR", fmt="json")
    logger.info("suppressed")
    assert logger is not None
    setup_logging(level="WARNING")
