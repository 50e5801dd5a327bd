"""
Path Metrics Module

Navigation error, trajectory length, success, oracle success and
success weighted by path length of finished episodes.
"""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from hybridnav.evalmetrics.models import AggregateReport, EpisodeRecord, MetricsSummary
from hybridnav.exceptions import AggregationError, EvaluationError, HybridNavError
from hybridnav.graph import euclidean


logger = logging.getLogger(__name__)

SUCCESS_RADIUS = 3.0


def trajectory_length(world, trajectory: Sequence[int]) -> float:
    """
    Sum of the world edge lengths along a trajectory.

    Raises:
        EvaluationError: If two consecutive nodes are not adjacent.
    """
    total = 0.0
    for a, b in zip(trajectory, trajectory[1:]):
        if not world.has_edge(a, b):
            raise EvaluationError(
                f"Trajectory step ({a}, {b}) is not a world edge.",
                details={'step': [a, b]}
            )
        total += world.edge_length(a, b)
    return total


def episode_metrics(record: EpisodeRecord, world=None,
                    success_radius: float = SUCCESS_RADIUS) -> MetricsSummary:
    """
    Path metrics of one episode.

    SPL = SR * l / max(l, p) with l the shortest-path length from start to
    goal and p the trajectory length; p = 0 gives SPL = SR.

    Args:
        record: Finished episode.
        world: World to score against; ``record.world`` by default.
        success_radius: Success threshold in meters.

    Returns:
        MetricsSummary with SR, OSR in {0, 1}.

    Raises:
        EvaluationError: If the goal or a trajectory node is not in the
            world, the trajectory is empty or steps off the world edges.

    Example:
        >>> episode_metrics(record).to_dict()
        {'NE': 0.0, 'TL': 4.0, 'SR': 1.0, 'OSR': 1.0, 'SPL': 1.0}
    """
    world = world if world is not None else record.world
    if world is None or not record.trajectory:
        raise EvaluationError(
            "Episode record needs a world and a non-empty trajectory.",
            details={'episode_id': record.episode_id}
        )
    unknown = [n for n in [record.goal_node_id, *record.trajectory] if not world.has_node(n)]
    if unknown:
        raise EvaluationError(
            f"Episode {record.episode_id} references unknown world nodes {unknown}.",
            details={'episode_id': record.episode_id, 'unknown': unknown}
        )

    goal = world.node(record.goal_node_id).position
    ne = euclidean(record.stop_position, goal)
    tl = trajectory_length(world, record.trajectory)
    sr = float(ne <= success_radius)
    nearest = min(euclidean(world.node(n).position, goal) for n in record.trajectory)
    osr = float(min(nearest, ne) <= success_radius)
    try:
        _, shortest = world.shortest_path(record.start_node_id, record.goal_node_id)
    except HybridNavError as e:
        raise EvaluationError(
            f"No shortest path for episode {record.episode_id}: {e.message}",
            details={'episode_id': record.episode_id}
        )
    if tl == 0.0:
        spl = sr
    else:
        spl = sr * shortest / max(shortest, tl)

    summary = MetricsSummary(ne, tl, sr, osr, spl)
    if not summary.spl <= summary.sr <= summary.osr:
        raise EvaluationError(
            f"Metric ordering SPL <= SR <= OSR violated for episode {record.episode_id}.",
            details={'episode_id': record.episode_id, **summary.to_dict()}
        )
    return summary


def _mean(summaries: List[MetricsSummary]) -> MetricsSummary:
    ne, tl, sr, osr, spl = np.mean([s.values() for s in summaries], axis=0)
    return MetricsSummary(float(ne), float(tl), 100.0 * float(sr), 100.0 * float(osr), float(spl))


def aggregate(
    records: Sequence[EpisodeRecord],
    summaries: Optional[Sequence[MetricsSummary]] = None
) -> AggregateReport:
    """
    Mean metrics over episodes, SR and OSR as percentages.

    Args:
        records: Finished episodes.
        summaries: Their metrics, when already computed.

    Raises:
        AggregationError: If there are no records.

    Example:
        >>> aggregate([success, failure]).overall.sr
        50.0
    """
    if not records:
        raise AggregationError("Cannot aggregate an empty record set.", details={'records': 0})
    if summaries is None:
        summaries = [episode_metrics(r) for r in records]
    if len(summaries) != len(records):
        raise AggregationError(
            "Records and summaries differ in number.",
            details={'records': len(records), 'summaries': len(summaries)}
        )

    groups: Dict[str, List[MetricsSummary]] = {}
    for record, summary in zip(records, summaries):
        groups.setdefault(record.category, []).append(summary)

    report = AggregateReport(
        overall=_mean(list(summaries)),
        episodes=len(records),
        by_category={c: _mean(group) for c, group in groups.items()},
        category_counts={c: len(group) for c, group in groups.items()},
    )
    logger.info("Aggregated %d episodes: SR %.1f%%, SPL %.3f",
                report.episodes, report.overall.sr, report.overall.spl)
    return report
