"""
Analysis Module

Statistics over ablation rows: bootstrap confidence of the success gap
between two configurations and the Spearman trend of a metric against a
swept knob.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import spearmanr

from hybridnav.exceptions import AggregationError


BOOTSTRAP_RESAMPLES = 10_000


@dataclass(frozen=True)
class GapEstimate:
    """Mean difference b - a with a percentile bootstrap interval."""
    gap: float
    low: float
    high: float
    confidence: float
    resamples: int = BOOTSTRAP_RESAMPLES

    @property
    def significant(self) -> bool:
        return self.low > 0.0 or self.high < 0.0

    def to_dict(self):
        return {'gap': self.gap, 'low': self.low, 'high': self.high,
                'confidence': self.confidence, 'resamples': self.resamples}


def bootstrap_gap(a: Sequence[float], b: Sequence[float], resamples: int = BOOTSTRAP_RESAMPLES,
                  confidence: float = 0.95, seed: int = 0) -> GapEstimate:
    """
    Paired bootstrap of mean(b) - mean(a) over episodes.

    Raises:
        AggregationError: If the samples are empty or of different length.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) == 0 or len(a) != len(b):
        raise AggregationError("Bootstrap needs two non-empty paired samples.",
                               details={'a': len(a), 'b': len(b)})
    rng = np.random.default_rng(seed)
    diff = b - a
    index = rng.integers(0, len(diff), size=(resamples, len(diff)))
    means = diff[index].mean(axis=1)
    tail = (1.0 - confidence) / 2.0
    low, high = np.quantile(means, [tail, 1.0 - tail])
    return GapEstimate(float(diff.mean()), float(low), float(high), confidence, resamples)


def spearman_trend(knob: Sequence[float], metric: Sequence[float]) -> float:
    """
    Spearman rank correlation of a metric against a knob.

    Returns NaN when either input is constant.

    Example:
        >>> spearman_trend([0, 0.25, 0.5, 1.0], [60, 55, 50, 41])
        -1.0
    """
    if len(knob) != len(metric) or len(knob) < 2:
        raise AggregationError("Trend needs two or more paired values.",
                               details={'knob': len(knob), 'metric': len(metric)})
    if np.ptp(np.asarray(knob, dtype=float)) == 0 or np.ptp(np.asarray(metric, dtype=float)) == 0:
        return float('nan')
    return float(spearmanr(knob, metric)[0])
