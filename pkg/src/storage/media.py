"""Raw video files and portable-pixmap frame export."""

import struct
from pathlib import Path

import numpy as np

from src.core.exceptions import CheckpointError, ShapeError

_VIDEO_HEADER = struct.Struct("<4I")


def write_video(path: str | Path, video: np.ndarray) -> Path:
    """Write one ``(T, C, H, W)`` video: u32 T, H, W, C then float32 in (t, c, row, col) order."""
    video = np.asarray(video)
    if video.ndim != 4:
        raise ShapeError(f"video must be (T, C, H, W), got {video.shape}")
    T, C, H, W = video.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(_VIDEO_HEADER.pack(T, H, W, C) + np.ascontiguousarray(video, dtype="<f4").tobytes())
    return path


def read_video(path: str | Path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if len(buf) < _VIDEO_HEADER.size:
        raise CheckpointError(f"{path}: truncated video header")
    T, H, W, C = _VIDEO_HEADER.unpack_from(buf)
    expected = _VIDEO_HEADER.size + 4 * T * C * H * W
    if len(buf) != expected:
        raise CheckpointError(f"{path}: expected {expected} bytes, found {len(buf)}")
    data = np.frombuffer(buf, dtype="<f4", offset=_VIDEO_HEADER.size)
    return data.astype(np.float32).reshape(T, C, H, W)


def to_bytes_image(frame: np.ndarray) -> np.ndarray:
    """Map a ``(C, H, W)`` frame in [-1, 1] to ``(H, W, 3)`` uint8."""
    if frame.ndim != 3:
        raise ShapeError(f"frame must be (C, H, W), got {frame.shape}")
    pixels = np.clip((np.asarray(frame, dtype=np.float64) + 1.0) * 127.5, 0.0, 255.0)
    pixels = np.rint(pixels).astype(np.uint8).transpose(1, 2, 0)
    if pixels.shape[2] == 1:
        pixels = np.repeat(pixels, 3, axis=2)
    elif pixels.shape[2] != 3:
        pixels = np.repeat(pixels[:, :, :1], 3, axis=2)
    return pixels


def write_ppm(path: str | Path, frame: np.ndarray) -> Path:
    """Binary P6 pixmap of one frame."""
    rgb = to_bytes_image(frame)
    H, W, _ = rgb.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(f"P6\n{W} {H}\n255\n".encode("ascii") + rgb.tobytes())
    return path


def export_sample(out_dir: str | Path, name: str, video: np.ndarray) -> list[Path]:
    """Write ``<name>.video`` plus ``<name>_frame_XXX.ppm`` per frame."""
    out_dir = Path(out_dir)
    written = [write_video(out_dir / f"{name}.video", video)]
    for t, frame in enumerate(np.asarray(video)):
        written.append(write_ppm(out_dir / f"{name}_frame_{t:03d}.ppm", frame))
    return written
