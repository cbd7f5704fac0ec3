"""Bounded worker pool for independent numerical evaluations."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, List, Optional, TypeVar
import logging
import os
import threading

from .config import THREADS_ENV

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_lock = threading.Lock()
_cap: Optional[int] = None


def current_threads() -> int:
    with _lock:
        if _cap is not None:
            return _cap
    raw = os.getenv(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
    return 1


@contextmanager
def thread_cap(threads: Optional[int]) -> Iterator[None]:
    global _cap
    with _lock:
        previous = _cap
        _cap = None if threads is None else max(1, int(threads))
    try:
        yield
    finally:
        with _lock:
            _cap = previous


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Apply ``fn`` to every item; results come back in input order."""
    work = list(items)
    threads = min(current_threads(), len(work))
    if threads <= 1:
        return [fn(item) for item in work]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, work))
