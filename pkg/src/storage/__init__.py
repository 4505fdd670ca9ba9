"""On-disk formats: checkpoints and sampled media."""

from src.storage.checkpoint import (
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from src.storage.media import export_sample, read_video, write_ppm, write_video

__all__ = [
    "Checkpoint",
    "decode_checkpoint",
    "encode_checkpoint",
    "export_sample",
    "load_checkpoint",
    "read_video",
    "save_checkpoint",
    "write_ppm",
    "write_video",
]
