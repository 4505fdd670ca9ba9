"""Binary checkpoint format.

Layout (little-endian)::

    b"SVCK" | u32 version | u64 step | u64 seed | u64 optimizer step
    u8 optimizer mode | f64 EMA halflife | u32 len + UTF-8 run config
    u32 record count | records | u32 CRC-32 of all preceding bytes

Each record is ``u16 len + name | u8 ndim | u32 dims... | float32 data``.
Names are prefixed ``param/``, ``ema/``, ``opt.m/`` and ``opt.v/``.
"""

import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog

from src.core.exceptions import CheckpointError
from src.models.fit.params import FitParams
from src.training.ema import EmaState
from src.training.optim import OptimizerMode, OptimizerState
from src.training.state import TrainState

logger = structlog.get_logger(__name__)

MAGIC = b"SVCK"
VERSION = 1
_HEADER = struct.Struct("<4sIQQQBd")
_U32 = struct.Struct("<I")
_U16 = struct.Struct("<H")
_MODES = (OptimizerMode.ADAM, OptimizerMode.LAMB)
_GROUPS = ("param", "ema", "opt.m", "opt.v")


@dataclass
class Checkpoint:
    state: TrainState
    config_text: str


def _groups(state: TrainState) -> dict[str, dict[str, np.ndarray]]:
    return {
        "param": dict(state.params),
        "ema": dict(state.ema.shadow),
        "opt.m": state.opt.m,
        "opt.v": state.opt.v,
    }


def encode_checkpoint(state: TrainState, config_text: str = "") -> bytes:
    """Serialize a training state; the same state always yields the same bytes."""
    config = config_text.encode("utf-8")
    parts = [
        _HEADER.pack(
            MAGIC,
            VERSION,
            state.step,
            state.seed,
            state.opt.step,
            _MODES.index(state.opt.mode),
            float(state.ema.halflife),
        ),
        _U32.pack(len(config)),
        config,
    ]
    records: list[bytes] = []
    for group, arrays in _groups(state).items():
        for name in state.params:
            if name not in arrays:
                raise CheckpointError(f"{group} has no entry for {name}")
            records.append(_record(f"{group}/{name}", arrays[name]))
    parts.append(_U32.pack(len(records)))
    parts.extend(records)
    body = b"".join(parts)
    return body + _U32.pack(zlib.crc32(body))


def _record(name: str, array: np.ndarray) -> bytes:
    key = name.encode("utf-8")
    data = np.ascontiguousarray(array, dtype="<f4")
    return b"".join(
        [
            _U16.pack(len(key)),
            key,
            bytes([data.ndim]),
            struct.pack(f"<{data.ndim}I", *data.shape),
            data.tobytes(),
        ]
    )


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError("checkpoint is truncated")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: struct.Struct) -> tuple:
        return fmt.unpack(self.take(fmt.size))


def decode_checkpoint(buf: bytes) -> Checkpoint:
    """Parse and verify checkpoint bytes.

    Raises:
        CheckpointError: On a bad magic, unsupported version, CRC mismatch
            or malformed record
    """
    if len(buf) < _HEADER.size + _U32.size:
        raise CheckpointError("checkpoint is truncated")
    body, footer = buf[:-4], buf[-4:]
    if buf[:4] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    (expected,) = _U32.unpack(footer)
    if zlib.crc32(body) != expected:
        raise CheckpointError("checkpoint CRC mismatch")

    reader = _Reader(body)
    _, version, step, seed, opt_step, mode, halflife = reader.unpack(_HEADER)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if mode >= len(_MODES):
        raise CheckpointError(f"unknown optimizer mode {mode}")
    (config_len,) = reader.unpack(_U32)
    config_text = reader.take(config_len).decode("utf-8")

    (count,) = reader.unpack(_U32)
    groups: dict[str, dict[str, np.ndarray]] = {g: {} for g in _GROUPS}
    for _ in range(count):
        (key_len,) = reader.unpack(_U16)
        key = reader.take(key_len).decode("utf-8")
        group, sep, name = key.partition("/")
        if not sep or group not in groups:
            raise CheckpointError(f"unknown record {key!r}")
        ndim = reader.take(1)[0]
        shape = struct.unpack(f"<{ndim}I", reader.take(4 * ndim))
        size = int(np.prod(shape, dtype=np.int64))
        data = np.frombuffer(reader.take(4 * size), dtype="<f4").astype(np.float32).reshape(shape)
        groups[group][name] = data
    if reader.pos != len(body):
        raise CheckpointError("trailing bytes after the last record")

    names = list(groups["param"])
    for group in _GROUPS[1:]:
        if list(groups[group]) != names:
            raise CheckpointError(f"{group} records do not match the parameters")

    state = TrainState(
        params=FitParams(groups["param"]),
        opt=OptimizerState(_MODES[mode], groups["opt.m"], groups["opt.v"], opt_step),
        ema=EmaState(FitParams(groups["ema"]), halflife),
        step=step,
        seed=seed,
    )
    return Checkpoint(state, config_text)


def save_checkpoint(path: str | Path, state: TrainState, config_text: str = "") -> Path:
    """Write atomically through a temporary sibling file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(encode_checkpoint(state, config_text))
    os.replace(tmp, path)
    logger.info("checkpoint_saved", path=str(path), step=state.step)
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    checkpoint = decode_checkpoint(buf)
    logger.info("checkpoint_loaded", path=str(path), step=checkpoint.state.step)
    return checkpoint
