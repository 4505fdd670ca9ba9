"""Forward-pass cost as the patch-token count doubles."""

import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import orjson
import structlog

from src.core.exceptions import ConfigurationError
from src.models.fit.accounting import forward_macs
from src.models.fit.config import FitConfig
from src.models.fit.network import FitNetwork
from src.tensor.context import no_grad
from src.utils.metrics import CsvWriter

logger = structlog.get_logger(__name__)

BENCH_COLUMNS = ("patch_tokens", "groups", "latents", "macs", "wall_ms", "mac_growth", "time_growth")
MAX_MAC_GROWTH = 2.2


@dataclass
class BenchRow:
    patch_tokens: int
    groups: int
    latents: int
    macs: int
    wall_ms: float
    mac_growth: float = float("nan")
    time_growth: float = float("nan")


def doubled_configs(base: FitConfig, doublings: int) -> list[FitConfig]:
    """``base`` plus configs with the frame width doubled ``doublings`` times.

    Group size is fixed in patch units, so the group count doubles with the
    width while the latent count stays the same.
    """
    configs = [base]
    for _ in range(doublings):
        T, H, W, C = configs[-1].input_shape
        try:
            configs.append(FitConfig(**{**configs[-1].model_dump(), "input_shape": (T, H, 2 * W, C)}))
        except ValueError as e:
            raise ConfigurationError(f"cannot double width to {2 * W}: {e}") from e
    return configs


def time_forward(cfg: FitConfig, batch: int = 1, repeats: int = 3, seed: int = 0) -> float:
    """Best-of-``repeats`` wall time of one forward pass in milliseconds."""
    network = FitNetwork(cfg)
    p = network.init(seed).tensors()
    T, H, W, C = cfg.input_shape
    x = np.random.default_rng(seed).standard_normal((batch, T, C, H, W))
    args = (np.ones(batch), np.full(batch, 8.0), [(H, W)] * batch, np.ones(batch, dtype=np.int64))
    best = float("inf")
    with no_grad():
        for _ in range(max(repeats, 1)):
            started = time.perf_counter()
            network.forward(p, x, *args)
            best = min(best, (time.perf_counter() - started) * 1000.0)
    return best


class BenchmarkService:
    """Measures MACs and wall time of ``fit_forward`` across doubled token counts."""

    def __init__(self, base: FitConfig, doublings: int = 2, repeats: int = 3):
        self.base = base
        self.doublings = doublings
        self.repeats = repeats

    def run(self) -> list[BenchRow]:
        rows: list[BenchRow] = []
        for cfg in doubled_configs(self.base, self.doublings):
            row = BenchRow(
                patch_tokens=cfg.geometry.num_tokens,
                groups=cfg.geometry.num_groups,
                latents=cfg.latent_count,
                macs=forward_macs(cfg),
                wall_ms=time_forward(cfg, repeats=self.repeats),
            )
            if rows:
                row.mac_growth = row.macs / rows[-1].macs
                row.time_growth = row.wall_ms / rows[-1].wall_ms
            logger.info("bench_row", **asdict(row))
            rows.append(row)
        return rows

    @staticmethod
    def max_growth(rows: list[BenchRow]) -> float:
        growth = [r.mac_growth for r in rows[1:]]
        return max(growth) if growth else 1.0


def format_rows(rows: list[BenchRow]) -> str:
    lines = [f"{'tokens':>8} {'groups':>6} {'latents':>7} {'MACs':>14} {'wall_ms':>10} {'MAC x':>7} {'time x':>7}"]
    for r in rows:
        lines.append(
            f"{r.patch_tokens:>8} {r.groups:>6} {r.latents:>7} {r.macs:>14} {r.wall_ms:>10.2f} "
            f"{r.mac_growth:>7.3f} {r.time_growth:>7.3f}"
        )
    return "\n".join(lines)


def write_bench_csv(rows: list[BenchRow], path: str | Path) -> None:
    with CsvWriter(path, BENCH_COLUMNS) as writer:
        for r in rows:
            writer.write(asdict(r))


def write_bench_json(rows: list[BenchRow], path: str | Path) -> None:
    payload = {"rows": [asdict(r) for r in rows], "max_mac_growth": BenchmarkService.max_growth(rows)}
    Path(path).write_bytes(orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY))
