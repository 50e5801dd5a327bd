"""
Performance Module

Ordered worker pools for episode evaluation and progress tracking.
"""

from hybridnav.performance.parallel import ParallelProcessor, get_optimal_n_workers
from hybridnav.performance.progress import ProgressTracker

__all__ = [
    'ParallelProcessor',
    'get_optimal_n_workers',
    'ProgressTracker',
]
