"""
Evaluation Models Module

Records of finished episodes and their path metrics.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


METRIC_COLUMNS = ('NE', 'TL', 'SR', 'OSR', 'SPL')


@dataclass
class EpisodeRecord:
    """
    Outcome of one episode.

    Attributes:
        episode_id: Unique episode label.
        trajectory: Every traversed world node, in order, starting at the
            start node.
        stop_position: Position the agent stopped at, meters.
        goal_node_id: Last node of the expert path.
        category: Instruction category (S1, S2, S3 or plain).
        world: The WorldGraph the episode ran in.
        diagnostic: Error record when the episode was aborted.
    """
    episode_id: str
    trajectory: List[int]
    stop_position: np.ndarray
    goal_node_id: int
    category: str = 'plain'
    world: Any = field(default=None, repr=False, compare=False)
    diagnostic: Optional[Dict[str, Any]] = None

    @property
    def start_node_id(self) -> int:
        return self.trajectory[0]

    @property
    def aborted(self) -> bool:
        return self.diagnostic is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'episode_id': self.episode_id,
            'category': self.category,
            'trajectory': [int(n) for n in self.trajectory],
            'stop_position': [float(v) for v in self.stop_position],
            'goal_node_id': int(self.goal_node_id),
            'diagnostic': self.diagnostic,
        }


@dataclass(frozen=True)
class MetricsSummary:
    """
    Path metrics of one episode or a mean over episodes.

    For a single episode SR and OSR are 0 or 1 and SPL lies in [0, 1];
    aggregated summaries report SR and OSR as percentages.

    Attributes:
        ne: Navigation error, meters.
        tl: Trajectory length, meters.
        sr: Success.
        osr: Oracle success.
        spl: Success weighted by path length.
    """
    ne: float
    tl: float
    sr: float
    osr: float
    spl: float

    def values(self) -> Tuple[float, float, float, float, float]:
        return (self.ne, self.tl, self.sr, self.osr, self.spl)

    def to_dict(self) -> Dict[str, float]:
        """Metrics keyed NE, TL, SR, OSR, SPL, in that order."""
        return {name: float(value) for name, value in zip(METRIC_COLUMNS, self.values())}

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> 'MetricsSummary':
        return cls(*(float(data[name]) for name in METRIC_COLUMNS))


@dataclass
class AggregateReport:
    """Mean metrics over a record set with a per-category breakdown."""
    overall: MetricsSummary
    episodes: int
    by_category: Dict[str, MetricsSummary] = field(default_factory=dict)
    category_counts: Dict[str, int] = field(default_factory=dict)

    def rows(self, label: str = 'all') -> List[Dict[str, Any]]:
        """Table rows: the overall mean, then one row per category."""
        rows = [{'label': label, 'episodes': self.episodes, **self.overall.to_dict()}]
        for category in sorted(self.by_category):
            rows.append({'label': f"{label}/{category}",
                         'episodes': self.category_counts[category],
                         **self.by_category[category].to_dict()})
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            'episodes': self.episodes,
            'overall': self.overall.to_dict(),
            'by_category': {c: self.by_category[c].to_dict() for c in sorted(self.by_category)},
            'category_counts': {c: self.category_counts[c] for c in sorted(self.category_counts)},
        }
