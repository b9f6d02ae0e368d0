"""
Thread-safe buffering of per-seed result records.

Seeds may finish in any order on the worker pool; records are released in
seed order so repeated runs write identical files.
"""

import threading
from typing import Any, Dict, List, Optional


class ThreadSafeDict:
    """Thread-safe dictionary wrapper using a lock."""

    def __init__(self, initial_data: Optional[Dict[Any, Any]] = None):
        """Initialize with optional initial data."""
        self._lock = threading.RLock()
        self._data = initial_data.copy() if initial_data else {}

    def get(self, key: Any, default: Any = None) -> Any:
        with self._lock:
            return self._data.get(key, default)

    def set(self, key: Any, value: Any) -> None:
        with self._lock:
            self._data[key] = value

    def setdefault(self, key: Any, default: Any) -> Any:
        with self._lock:
            return self._data.setdefault(key, default)

    def items(self):
        """Return a copy of all items."""
        with self._lock:
            return list(self._data.items())

    def clear(self) -> None:
        with self._lock:
            self._data.clear()

    def __contains__(self, key: Any) -> bool:
        with self._lock:
            return key in self._data

    def __len__(self) -> int:
        with self._lock:
            return len(self._data)


class ResultBuffer:
    """Collects records per seed and releases them sorted by seed."""

    def __init__(self):
        self._records = ThreadSafeDict()
        self._lock = threading.Lock()

    def add(self, seed: int, record: Dict[str, Any]) -> None:
        with self._lock:
            self._records.setdefault(seed, []).append(record)

    def extend(self, seed: int, records: List[Dict[str, Any]]) -> None:
        with self._lock:
            self._records.setdefault(seed, []).extend(records)

    def seeds(self) -> List[int]:
        return sorted(seed for seed, _ in self._records.items())

    def drain(self) -> List[Dict[str, Any]]:
        """All records in seed order (insertion order within a seed); empties the buffer."""
        with self._lock:
            ordered = sorted(self._records.items(), key=lambda kv: kv[0])
            self._records.clear()
        return [record for _, records in ordered for record in records]

    def __len__(self) -> int:
        return sum(len(r) for _, r in self._records.items())
