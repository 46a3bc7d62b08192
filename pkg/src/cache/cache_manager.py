from __future__ import annotations

from pathlib import Path
from typing import TypeVar

from diskcache import Cache

T = TypeVar("T")

DEFAULT_EXPIRE_S = 30 * 86400


class CacheManager:
    """
    Disk-based cache of expensive results, such as debugger runs during triage.

    Attributes
    ----------
    cache_dir: Path
        The directory where cache files are stored.
    cache: Cache
        The disk-based cache instance.

    """

    def __init__(self, cache_dir: str | Path) -> None:  # noqa: D107
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.cache = Cache(directory=str(self.cache_dir))

    def get(self, key: str) -> T | None:
        """
        Return the value from cache.

        Args:
        ----
            key (str): The key to retrieve from cache.

        Returns:
        -------
            T | None: The cached value if it exists and hasn't expired, None otherwise.

        """
        return self.cache.get(key)

    def set(self, key: str, value: T, expire: int = DEFAULT_EXPIRE_S) -> None:
        """Store `value` under `key` for `expire` seconds (30 days by default)."""
        self.cache.set(key, value, expire=expire)

    def delete(self, key: str) -> None:  # noqa: D102
        self.cache.delete(key)

    def clear(self) -> int:
        """
        Clear all cached data.

        Returns
        -------
            int: The number of removed entries.

        """
        return self.cache.clear()

    def close(self) -> None:  # noqa: D102
        self.cache.close()

    def __len__(self) -> int:  # noqa: D105
        return len(self.cache)
