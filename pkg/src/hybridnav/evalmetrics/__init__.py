"""
Evaluation Metrics Module

Path metrics of finished episodes (NE, TL, SR, OSR, SPL), aggregation with a
per-category breakdown and CSV/JSON export.
"""

from hybridnav.evalmetrics.models import (
    METRIC_COLUMNS,
    EpisodeRecord,
    MetricsSummary,
    AggregateReport,
)
from hybridnav.evalmetrics.metrics import (
    SUCCESS_RADIUS,
    trajectory_length,
    episode_metrics,
    aggregate,
)
from hybridnav.evalmetrics.exporter import MetricsExporter, episode_frame, report_frame

__all__ = [
    'METRIC_COLUMNS',
    'EpisodeRecord',
    'MetricsSummary',
    'AggregateReport',
    'SUCCESS_RADIUS',
    'trajectory_length',
    'episode_metrics',
    'aggregate',
    'MetricsExporter',
    'episode_frame',
    'report_frame',
]
