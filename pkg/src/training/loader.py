"""Background batch production."""

import queue
import threading
from collections.abc import Callable, Iterator
from typing import Any

import structlog

logger = structlog.get_logger(__name__)

_DONE = object()


class PrefetchLoader:
    """Produce ``make_batch(step)`` for a step range on a worker thread.

    Batches arrive in step order through a bounded queue. Each batch must
    depend only on its step, so prefetching never changes results.
    """

    def __init__(self, make_batch: Callable[[int], Any], start: int, stop: int, depth: int = 2):
        self.make_batch = make_batch
        self.start = start
        self.stop = stop
        self._queue: queue.Queue[Any] = queue.Queue(maxsize=max(depth, 1))
        self._stop_event = threading.Event()
        self._thread: threading.Thread | None = None

    def _offer(self, item: Any) -> bool:
        while not self._stop_event.is_set():
            try:
                self._queue.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def _produce(self) -> None:
        try:
            for step in range(self.start, self.stop):
                if not self._offer((step, self.make_batch(step))):
                    return
        except Exception as e:
            logger.error("prefetch_failed", error=str(e))
            self._offer(e)
            return
        self._offer(_DONE)

    def __iter__(self) -> Iterator[tuple[int, Any]]:
        self._thread = threading.Thread(target=self._produce, name="snapdiff-prefetch", daemon=True)
        self._thread.start()
        try:
            while True:
                item = self._queue.get()
                if item is _DONE:
                    return
                if isinstance(item, Exception):
                    raise item
                yield item
        finally:
            self.close()

    def close(self) -> None:
        self._stop_event.set()
        if self._thread is not None:
            # Drain so a blocked producer can observe the stop flag.
            while not self._queue.empty():
                try:
                    self._queue.get_nowait()
                except queue.Empty:
                    break
            self._thread.join(timeout=5.0)
            self._thread = None
