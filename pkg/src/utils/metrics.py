"""Metrics collection and CSV output."""

import csv
from collections.abc import Mapping, Sequence
from pathlib import Path
from types import TracebackType
from typing import Any, TextIO


class MetricsCollector:
    """Counters, gauges and exponentially smoothed series for one run."""

    def __init__(self, smoothing: float = 0.9):
        """
        Initialize metrics collector.

        Args:
            smoothing: Weight of the previous value in smoothed series
        """
        self.smoothing = smoothing
        self.metrics: dict[str, Any] = {}

    def increment(self, metric_name: str, value: int = 1):
        """Increment a counter metric."""
        self.metrics[metric_name] = self.metrics.get(metric_name, 0) + value

    def gauge(self, metric_name: str, value: float):
        """Set a gauge metric."""
        self.metrics[metric_name] = value

    def observe(self, metric_name: str, value: float) -> float:
        """
        Fold a sample into the smoothed series ``<metric_name>_smoothed``.

        Returns:
            The updated smoothed value
        """
        key = f"{metric_name}_smoothed"
        previous = self.metrics.get(key)
        smoothed = value if previous is None else self.smoothing * previous + (1 - self.smoothing) * value
        self.metrics[key] = smoothed
        self.metrics[metric_name] = value
        return smoothed

    def get_metrics(self) -> dict[str, Any]:
        """Snapshot of all collected metrics."""
        return self.metrics.copy()


class CsvWriter:
    """Append rows with a fixed column order to a CSV file.

    The header is written when the file is new or ``append`` is false.
    """

    def __init__(self, path: str | Path, columns: Sequence[str], append: bool = False):
        self.path = Path(path)
        self.columns = list(columns)
        self.append = append
        self._handle: TextIO | None = None
        self._writer: Any = None

    def __enter__(self) -> "CsvWriter":
        self.open()
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()

    def open(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        exists = self.path.exists() and self.path.stat().st_size > 0
        mode = "a" if self.append else "w"
        self._handle = self.path.open(mode, newline="", encoding="utf-8")
        self._writer = csv.DictWriter(self._handle, fieldnames=self.columns, extrasaction="ignore")
        if not (self.append and exists):
            self._writer.writeheader()

    def write(self, row: Mapping[str, Any]) -> None:
        if self._writer is None:
            self.open()
        self._writer.writerow({key: _format(row.get(key)) for key in self.columns})
        assert self._handle is not None
        self._handle.flush()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
            self._writer = None


def _format(value: Any) -> Any:
    # repr round-trips floats exactly
    if isinstance(value, float):
        return repr(value)
    return value


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))
