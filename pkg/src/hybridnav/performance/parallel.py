"""
Parallel Processing Module

Runs independent episodes across worker processes. Each worker can be
prepared once by an initializer (for example to load a checkpoint) and
results always come back in the order of the submitted items, so a
parallel run reduces to the same report as a serial one.
"""

import logging
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, List, Optional, Tuple

from hybridnav.exceptions import HybridNavError


logger = logging.getLogger(__name__)


class ParallelProcessor:
    """
    Ordered process-pool map.

    Args:
        n_workers: Worker processes, capped at the CPU count; all but one
            core when None. One worker runs
            everything in the calling process.
        initializer: Called once per worker before any item.
        initargs: Arguments of the initializer.

    Example:
        >>> processor = ParallelProcessor(n_workers=4, initializer=load_agent,
        ...                               initargs=("policy.ckpt",))
        >>> results = processor.map(run_one, episodes)
    """

    def __init__(
        self,
        n_workers: Optional[int] = None,
        initializer: Optional[Callable] = None,
        initargs: Tuple[Any, ...] = ()
    ):
        self.n_workers = get_optimal_n_workers(n_workers)
        self.initializer = initializer
        self.initargs = tuple(initargs)

    def map(
        self,
        func: Callable,
        items: List[Any],
        on_result: Optional[Callable[[int, Any], None]] = None
    ) -> List[Any]:
        """
        Apply ``func`` to every item.

        Args:
            func: Picklable function of one item.
            items: Items to process.
            on_result: Called with (index, result) as results arrive.

        Returns:
            Results in item order.

        Raises:
            HybridNavError: Re-raised from the failing item.
            RuntimeError: If a worker fails with any other error.
        """
        if not items:
            return []

        if self.n_workers <= 1 or len(items) == 1:
            if self.initializer is not None:
                self.initializer(*self.initargs)
            results = []
            for index, item in enumerate(items):
                results.append(func(item))
                if on_result is not None:
                    on_result(index, results[-1])
            return results

        results: List[Any] = [None] * len(items)
        workers = min(self.n_workers, len(items))
        logger.debug("Dispatching %d items to %d workers", len(items), workers)
        with ProcessPoolExecutor(max_workers=workers, initializer=self.initializer,
                                 initargs=self.initargs) as executor:
            future_to_index = {executor.submit(func, item): idx for idx, item in enumerate(items)}
            for future in as_completed(future_to_index):
                idx = future_to_index[future]
                try:
                    results[idx] = future.result()
                except HybridNavError:
                    raise
                except Exception as e:
                    raise RuntimeError(f"Worker failed on item {idx}: {e}") from e
                if on_result is not None:
                    on_result(idx, results[idx])
        return results


def get_optimal_n_workers(requested: Optional[int] = None) -> int:
    """Requested worker count, capped at the CPU count; all but one core by default."""
    cpu_count = mp.cpu_count()
    if requested is None:
        return max(cpu_count - 1, 1)
    return max(1, min(int(requested), cpu_count))
