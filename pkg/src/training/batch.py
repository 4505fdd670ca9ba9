"""Joint image/video training batches."""

from dataclasses import dataclass

import numpy as np

from src.core.exceptions import ShapeError
from src.models.fit.conditioning import INFINITE_FRAMERATE


@dataclass(frozen=True)
class VideoBatch:
    """Pixels ``(B, T, C, H, W)`` with per-sample frame rate, resolution and class.

    ``cond_id`` 0 is the null condition; images carry an infinite frame rate
    unless trained with the base-rate ablation.
    """

    pixels: np.ndarray
    framerate: np.ndarray
    resolution: np.ndarray
    cond_id: np.ndarray
    is_image: np.ndarray

    def __post_init__(self) -> None:
        if self.pixels.ndim != 5:
            raise ShapeError(f"pixels must be (B, T, C, H, W), got {self.pixels.shape}")
        batch = self.pixels.shape[0]
        for name in ("framerate", "cond_id", "is_image"):
            if np.shape(getattr(self, name)) != (batch,):
                raise ShapeError(f"{name} must have shape ({batch},)")
        if np.shape(self.resolution) != (batch, 2):
            raise ShapeError(f"resolution must have shape ({batch}, 2)")

    def __len__(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def frames(self) -> int:
        return int(self.pixels.shape[1])

    @classmethod
    def concat(cls, batches: list["VideoBatch"]) -> "VideoBatch":
        return cls(
            pixels=np.concatenate([b.pixels for b in batches]),
            framerate=np.concatenate([b.framerate for b in batches]),
            resolution=np.concatenate([b.resolution for b in batches]),
            cond_id=np.concatenate([b.cond_id for b in batches]),
            is_image=np.concatenate([b.is_image for b in batches]),
        )


def images_as_videos(
    images: np.ndarray,
    T: int,
    cond_id: np.ndarray,
    framerate: float = INFINITE_FRAMERATE,
) -> VideoBatch:
    """Replicate ``(B, C, H, W)`` images over T frames."""
    images = np.asarray(images, dtype=np.float32)
    if images.ndim != 4:
        raise ShapeError(f"images must be (B, C, H, W), got {images.shape}")
    batch, _, H, W = images.shape
    pixels = np.repeat(images[:, None], T, axis=1)
    return VideoBatch(
        pixels=pixels,
        framerate=np.full(batch, framerate, dtype=np.float64),
        resolution=np.tile(np.array([H, W], dtype=np.float64), (batch, 1)),
        cond_id=np.asarray(cond_id, dtype=np.int64).reshape(batch),
        is_image=np.ones(batch, dtype=bool),
    )
