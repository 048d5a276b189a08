"""
Thread-safe containers for parallel analysis branches

Independent branches (the h values of a finite-difference consistency run,
ensemble members between orthonormalizations) run on worker threads and
merge their results here. Every access takes the lock.
"""

import logging
import os
from threading import RLock
from typing import Any, Dict, List, Optional, Tuple

logger = logging.getLogger(__name__)

THREADS_ENV = "BIPOLARMHD_THREADS"


def resolve_workers(requested: Optional[int] = None) -> int:
    """
    Worker count for FFTs and branch pools.

    An explicit request wins; otherwise BIPOLARMHD_THREADS; otherwise 1.
    """
    if requested is not None:
        return max(1, int(requested))
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring {THREADS_ENV}={raw!r}: not an integer")
        return 1
    if value < 1:
        logger.warning(f"Ignoring {THREADS_ENV}={raw!r}: must be >= 1")
        return 1
    return value


class BranchResults:
    """Results of independent branches keyed by a sortable label"""

    def __init__(self):
        self._lock = RLock()
        self._data: Dict[Any, Any] = {}
        self._failures: Dict[Any, str] = {}

    def record(self, key, value) -> None:
        with self._lock:
            self._data[key] = value

    def fail(self, key, reason: str) -> None:
        with self._lock:
            self._failures[key] = reason

    def __contains__(self, key) -> bool:
        with self._lock:
            return key in self._data or key in self._failures

    def __len__(self) -> int:
        with self._lock:
            return len(self._data) + len(self._failures)

    def get(self, key, default=None):
        with self._lock:
            return self._data.get(key, default)

    def failure(self, key) -> Optional[str]:
        with self._lock:
            return self._failures.get(key)

    def succeeded(self) -> List[Tuple[Any, Any]]:
        with self._lock:
            return sorted(self._data.items(), key=lambda item: item[0])

    def failed(self) -> List[Tuple[Any, str]]:
        with self._lock:
            return sorted(self._failures.items(), key=lambda item: item[0])
