"""
Progress Module

Progress bars for training epochs and episode evaluation.
"""

import time
from typing import Any

from tqdm import tqdm


class ProgressTracker:
    """
    tqdm progress bar that can be silenced.

    Example:
        >>> with ProgressTracker(total=300, description="Episodes") as tracker:
        ...     for episode in episodes:
        ...         run(episode)
        ...         tracker.update(1)
    """

    def __init__(self, total: int, description: str = "Processing", show_progress: bool = True,
                 unit: str = 'item'):
        self.total = total
        self.description = description
        self.show_progress = show_progress
        self._completed = 0
        self._start_time = time.time()
        self._pbar = tqdm(total=total, desc=description, unit=unit, disable=not show_progress)

    @property
    def completed(self) -> int:
        return self._completed

    def update(self, n: int = 1, **postfix: Any) -> None:
        """Advance by ``n`` items, optionally showing key/value postfix fields."""
        self._completed += n
        self._pbar.update(n)
        if postfix:
            self._pbar.set_postfix(**postfix)

    def close(self) -> None:
        self._pbar.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    def get_elapsed_time(self) -> float:
        return time.time() - self._start_time

    def get_eta(self) -> float:
        """Estimated seconds to completion; 0 before the first update."""
        elapsed = self.get_elapsed_time()
        if self._completed == 0 or elapsed == 0:
            return 0.0
        return (self.total - self._completed) / (self._completed / elapsed)
