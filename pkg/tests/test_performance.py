"""
Tests for the worker pool and progress tracking.
"""

import multiprocessing as mp

import pytest

from hybridnav.exceptions import EvaluationError
from hybridnav.performance import ParallelProcessor, ProgressTracker, get_optimal_n_workers


_STATE = {}


def _square(x):
    return x * x


def _remember(value):
    _STATE['value'] = value


def _read_state(_):
    return _STATE.get('value')


def _fail_domain(x):
    raise EvaluationError("bad episode", details={'item': x})


def _fail_other(x):
    raise KeyError(x)


class TestParallelProcessor:
    """Test suite for ParallelProcessor."""

    def test_serial_order(self):
        seen = []
        results = ParallelProcessor(n_workers=1).map(_square, [3, 1, 2],
                                                     on_result=lambda i, r: seen.append((i, r)))
        assert results == [9, 1, 4]
        assert seen == [(0, 9), (1, 1), (2, 4)]

    def test_empty(self):
        assert ParallelProcessor(n_workers=4).map(_square, []) == []

    def test_serial_initializer(self):
        """A single worker runs the initializer in the calling process."""
        _STATE.clear()
        processor = ParallelProcessor(n_workers=1, initializer=_remember, initargs=('ckpt',))
        assert processor.map(_read_state, [0, 1]) == ['ckpt', 'ckpt']

    def test_serial_domain_error_propagates(self):
        with pytest.raises(EvaluationError):
            ParallelProcessor(n_workers=1).map(_fail_domain, [1])

    @pytest.mark.slow
    def test_pool_keeps_item_order(self):
        items = list(range(12))
        seen = []
        results = ParallelProcessor(n_workers=2, initializer=_remember, initargs=(7,)).map(
            _square, items, on_result=lambda i, r: seen.append(i))
        assert results == [x * x for x in items]
        assert sorted(seen) == items

    @pytest.mark.slow
    def test_pool_initializer_runs_in_workers(self):
        processor = ParallelProcessor(n_workers=2, initializer=_remember, initargs=('ckpt',))
        assert processor.map(_read_state, [0, 1, 2]) == ['ckpt'] * 3

    @pytest.mark.slow
    def test_pool_errors(self):
        if mp.cpu_count() < 2:
            pytest.skip("needs two cores")
        with pytest.raises(EvaluationError):
            ParallelProcessor(n_workers=2).map(_fail_domain, [1, 2])
        with pytest.raises(RuntimeError, match="Worker failed"):
            ParallelProcessor(n_workers=2).map(_fail_other, [1, 2])


class TestOptimalWorkers:
    """Test suite for worker count selection."""

    def test_default_leaves_a_core(self):
        assert get_optimal_n_workers() == max(mp.cpu_count() - 1, 1)

    def test_capped(self):
        assert get_optimal_n_workers(10_000) == mp.cpu_count()
        assert get_optimal_n_workers(0) == 1
        assert get_optimal_n_workers(1) == 1

    def test_processor_uses_cap(self):
        assert ParallelProcessor(n_workers=10_000).n_workers == mp.cpu_count()


class TestProgressTracker:
    """Test suite for ProgressTracker."""

    def test_counts(self):
        with ProgressTracker(total=5, description="Episodes", show_progress=False) as tracker:
            assert tracker.get_eta() == 0.0
            tracker.update(2)
            tracker.update(1, loss=0.5)
            assert tracker.completed == 3
        assert tracker.get_elapsed_time() >= 0.0

    def test_eta_non_negative(self):
        tracker = ProgressTracker(total=4, show_progress=False, unit='epoch')
        tracker.update(4)
        assert tracker.get_eta() == pytest.approx(0.0)
        tracker.close()
