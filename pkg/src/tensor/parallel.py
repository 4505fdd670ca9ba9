"""Row-parallel matrix product kernel."""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from src.config.settings import settings
from src.tensor.context import is_serial

# Below this many output rows the split overhead dominates.
MIN_ROWS_PER_WORKER = 64

_executor: ThreadPoolExecutor | None = None


def get_executor() -> ThreadPoolExecutor:
    """Get the shared worker pool, sized by SNAPDIFF_THREADS."""
    global _executor

    if _executor is None:
        _executor = ThreadPoolExecutor(
            max_workers=settings.threads, thread_name_prefix="snapdiff-matmul"
        )

    return _executor


def shutdown_executor() -> None:
    """Release the worker pool."""
    global _executor

    if _executor is not None:
        _executor.shutdown(wait=True)
        _executor = None


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched ``a @ b``, split over the output rows of ``a`` when parallel.

    Each worker computes a contiguous block of rows, so results differ from
    the serial path by floating-point reassociation inside BLAS at most.
    """
    rows = a.shape[-2]
    workers = settings.threads
    if is_serial() or rows < 2 * MIN_ROWS_PER_WORKER:
        return np.matmul(a, b)

    chunks = min(workers, rows // MIN_ROWS_PER_WORKER)
    bounds = np.linspace(0, rows, chunks + 1).astype(int)
    pieces = [a[..., lo:hi, :] for lo, hi in zip(bounds[:-1], bounds[1:])]
    results = list(get_executor().map(lambda piece: np.matmul(piece, b), pieces))
    return np.concatenate(results, axis=-2)
