"""Procedural moving-sprite dataset.

Each class has a 7x7 binary template and a velocity. Videos show the
sprite bouncing off the frame borders; images are single rendered frames.
Pixels are +1 on the sprite and -1 on the background.
"""

from dataclasses import dataclass

import numpy as np

from src.core.exceptions import PreconditionError
from src.models.fit.conditioning import INFINITE_FRAMERATE
from src.training.batch import VideoBatch, images_as_videos

SPRITE_SIZE = 7
BACKGROUND = -1.0
FOREGROUND = 1.0

# (dy, dx) per class
CLASS_VELOCITIES = ((1, 0), (0, 1), (1, 1), (-1, 1))

CLASSIFY_CHUNK = 64


def sprite_templates() -> np.ndarray:
    """Binary templates: filled square, plus, hollow ring, diagonal cross."""
    n = SPRITE_SIZE
    square = np.ones((n, n))
    plus = np.zeros((n, n))
    plus[n // 2, :] = 1
    plus[:, n // 2] = 1
    ring = np.ones((n, n))
    ring[1:-1, 1:-1] = 0
    cross = np.maximum(np.eye(n), np.fliplr(np.eye(n)))
    return np.stack([square, plus, ring, cross]).astype(bool)


def render(template: np.ndarray, y: int, x: int, H: int, W: int) -> np.ndarray:
    canvas = np.full((H, W), BACKGROUND)
    n = template.shape[0]
    canvas[y : y + n, x : x + n] = np.where(template, FOREGROUND, BACKGROUND)
    return canvas


def bounce_path(y: int, x: int, dy: int, dx: int, length: int, H: int, W: int) -> list[tuple[int, int]]:
    """Positions of a sprite moving by (dy, dx) per frame, reflecting at the borders."""
    limit_y, limit_x = H - SPRITE_SIZE, W - SPRITE_SIZE
    path = [(y, x)]
    for _ in range(length - 1):
        if not 0 <= y + dy <= limit_y:
            dy = -dy
        if not 0 <= x + dx <= limit_x:
            dx = -dx
        y, x = y + dy, x + dx
        path.append((y, x))
    return path


@dataclass(frozen=True)
class SpriteDataset:
    """Renders class-conditional sprite videos and images."""

    T: int = 8
    H: int = 16
    W: int = 16
    C: int = 1
    n_classes: int = 4
    base_framerate: float = 8.0
    rate_factors: tuple[int, ...] = (1, 2, 4)
    image_framerate: str = "infinite"

    def __post_init__(self) -> None:
        if not 1 <= self.n_classes <= len(CLASS_VELOCITIES):
            raise PreconditionError(f"n_classes must be in [1, {len(CLASS_VELOCITIES)}]")
        if self.H < SPRITE_SIZE or self.W < SPRITE_SIZE:
            raise PreconditionError(f"frames must be at least {SPRITE_SIZE}x{SPRITE_SIZE}")
        if self.image_framerate not in ("infinite", "base"):
            raise PreconditionError(f"unknown image_framerate mode {self.image_framerate!r}")

    @property
    def templates(self) -> np.ndarray:
        return sprite_templates()[: self.n_classes]

    def _start(self, rng: np.random.Generator) -> tuple[int, int]:
        y = int(rng.integers(0, self.H - SPRITE_SIZE + 1))
        x = int(rng.integers(0, self.W - SPRITE_SIZE + 1))
        return y, x

    def render_video(self, rng: np.random.Generator, label: int, factor: int) -> np.ndarray:
        """``(T, C, H, W)`` video sampled every ``factor`` base frames."""
        dy, dx = CLASS_VELOCITIES[label]
        y, x = self._start(rng)
        path = bounce_path(y, x, dy, dx, (self.T - 1) * factor + 1, self.H, self.W)[::factor]
        template = self.templates[label]
        frames = np.stack([render(template, py, px, self.H, self.W) for py, px in path])
        return np.repeat(frames[:, None], self.C, axis=1).astype(np.float32)

    def render_image(self, rng: np.random.Generator, label: int) -> np.ndarray:
        """``(C, H, W)`` frame at a random position."""
        y, x = self._start(rng)
        frame = render(self.templates[label], y, x, self.H, self.W)
        return np.repeat(frame[None], self.C, axis=0).astype(np.float32)

    def video_batch(self, rng: np.random.Generator, n: int) -> VideoBatch:
        labels = rng.integers(0, self.n_classes, size=n)
        factors = rng.choice(np.asarray(self.rate_factors), size=n)
        pixels = np.zeros((n, self.T, self.C, self.H, self.W), dtype=np.float32)
        for i, (k, f) in enumerate(zip(labels, factors)):
            pixels[i] = self.render_video(rng, int(k), int(f))
        return VideoBatch(
            pixels=pixels,
            framerate=self.base_framerate / factors.astype(np.float64),
            resolution=np.tile(np.array([self.H, self.W], dtype=np.float64), (n, 1)),
            cond_id=labels.astype(np.int64) + 1,
            is_image=np.zeros(n, dtype=bool),
        )

    def image_batch(self, rng: np.random.Generator, n: int) -> VideoBatch:
        labels = rng.integers(0, self.n_classes, size=n)
        images = np.zeros((n, self.C, self.H, self.W), dtype=np.float32)
        for i, k in enumerate(labels):
            images[i] = self.render_image(rng, int(k))
        framerate = INFINITE_FRAMERATE if self.image_framerate == "infinite" else self.base_framerate
        return images_as_videos(images, self.T, labels.astype(np.int64) + 1, framerate)

    def batch(self, rng: np.random.Generator, n_videos: int, n_images: int) -> VideoBatch:
        """Joint batch: videos first, then images."""
        return VideoBatch.concat([self.video_batch(rng, n_videos), self.image_batch(rng, n_images)])


def make_dataset(
    seed: int,
    n_videos: int,
    n_images: int,
    T: int = 8,
    H: int = 16,
    W: int = 16,
    n_classes: int = 4,
    **kwargs,
) -> VideoBatch:
    """Fixed, fully reproducible sample set drawn from ``seed``."""
    dataset = SpriteDataset(T=T, H=H, W=W, n_classes=n_classes, **kwargs)
    return dataset.batch(np.random.default_rng(seed), n_videos, n_images)


class NearestTemplateClassifier:
    """Class of the template whose best placement has the lowest squared error."""

    def __init__(self, H: int, W: int, n_classes: int = 4):
        templates = sprite_templates()[:n_classes]
        positions = [(y, x) for y in range(H - SPRITE_SIZE + 1) for x in range(W - SPRITE_SIZE + 1)]
        self.n_classes = n_classes
        # (K, P, H * W)
        self.canvases = np.stack(
            [np.stack([render(t, y, x, H, W).reshape(-1) for y, x in positions]) for t in templates]
        )

    def classify_frames(self, frames: np.ndarray) -> np.ndarray:
        """Labels (0-based) of ``(N, H, W)`` or ``(N, C, H, W)`` frames."""
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim == 4:
            frames = frames.mean(axis=1)
        flat = frames.reshape(frames.shape[0], -1)
        labels = np.empty(flat.shape[0], dtype=np.int64)
        for lo in range(0, flat.shape[0], CLASSIFY_CHUNK):
            chunk = flat[lo : lo + CLASSIFY_CHUNK, None, None, :]
            sse = ((chunk - self.canvases[None]) ** 2).sum(axis=-1)
            labels[lo : lo + CLASSIFY_CHUNK] = sse.min(axis=2).argmin(axis=1)
        return labels

    def classify_videos(self, videos: np.ndarray) -> np.ndarray:
        """Majority vote over frames of ``(B, T, C, H, W)`` videos."""
        videos = np.asarray(videos)
        B, T = videos.shape[:2]
        votes = self.classify_frames(videos.reshape((B * T,) + videos.shape[2:])).reshape(B, T)
        return np.array([np.bincount(row, minlength=self.n_classes).argmax() for row in votes])

    def accuracy(self, videos: np.ndarray, labels: np.ndarray) -> float:
        predicted = self.classify_videos(videos)
        return float(np.mean(predicted == np.asarray(labels)))
