"""
Tests for path metrics, aggregation and metric export.
"""

import json

import numpy as np
import pandas as pd
import pytest

from hybridnav.evalmetrics import (
    METRIC_COLUMNS,
    EpisodeRecord,
    MetricsExporter,
    MetricsSummary,
    aggregate,
    episode_metrics,
    trajectory_length,
)
from hybridnav.exceptions import AggregationError, EvaluationError
from hybridnav.world import WorldGraph, WorldNode


def line_world(xs, offset=(0.0, 0.0, 0.0)):
    """Nodes along the x axis, consecutive ones connected."""
    shift = np.asarray(offset, dtype=float)
    nodes = [
        WorldNode(i, np.array([x, 0.0, 0.0]) + shift, np.array([1.0, 0.0]), np.zeros(2),
                  np.array([0.5, 0.5]), 0, 0)
        for i, x in enumerate(xs)
    ]
    edges = [(i, i + 1, float(xs[i + 1] - xs[i])) for i in range(len(xs) - 1)]
    return WorldGraph(nodes, edges, 1, 2, 1)


def record(world, trajectory, goal, category='plain', episode_id='e0', stop=None):
    stop = world.node(trajectory[-1]).position if stop is None else np.asarray(stop, dtype=float)
    return EpisodeRecord(episode_id, list(trajectory), stop, goal, category, world)


class TestEpisodeMetrics:
    """Test suite for single-episode metrics."""

    def test_detour_halves_spl(self):
        """Shortest path 4 m, walked 8 m, stopped on the goal: SPL 0.5."""
        world = line_world([0.0, 2.0, 4.0])
        summary = episode_metrics(record(world, [0, 1, 0, 1, 2], 2))
        assert summary.to_dict() == {'NE': 0.0, 'TL': 8.0, 'SR': 1.0, 'OSR': 1.0, 'SPL': 0.5}

    def test_direct_route(self):
        world = line_world([0.0, 2.0, 4.0])
        assert episode_metrics(record(world, [0, 1, 2], 2)).spl == 1.0

    def test_just_outside_radius_fails(self):
        """3.01 m from the goal is a failure; SPL follows SR."""
        world = line_world([0.0, 3.01])
        summary = episode_metrics(record(world, [0], 1))
        assert summary.ne == pytest.approx(3.01)
        assert summary.sr == 0.0
        assert summary.osr == 0.0
        assert summary.spl == 0.0
        assert summary.tl == 0.0

    def test_radius_is_inclusive(self):
        world = line_world([0.0, 3.0])
        assert episode_metrics(record(world, [0], 1)).sr == 1.0

    def test_zero_length_success(self):
        """Starting on the goal and stopping: SPL = SR = 1."""
        world = line_world([0.0, 2.0])
        summary = episode_metrics(record(world, [1], 1))
        assert (summary.sr, summary.spl) == (1.0, 1.0)

    def test_oracle_success(self):
        """Passing the goal and walking on counts for OSR only."""
        world = line_world([0.0, 4.0, 8.0, 12.0])
        summary = episode_metrics(record(world, [0, 1, 2, 3], 1))
        assert summary.sr == 0.0
        assert summary.osr == 1.0
        assert summary.ne == pytest.approx(8.0)

    def test_translation_invariance(self):
        """Moving the whole world leaves every metric unchanged."""
        a = line_world([0.0, 2.0, 4.0, 9.0])
        b = line_world([0.0, 2.0, 4.0, 9.0], offset=(100.0, -40.0, 3.0))
        for trajectory, goal in (([0, 1, 2], 3), ([0, 1, 2, 3, 2], 3), ([1, 0], 2)):
            ma = episode_metrics(record(a, trajectory, goal))
            mb = episode_metrics(record(b, trajectory, goal))
            assert ma.values() == pytest.approx(mb.values())

    def test_metric_ordering(self, world):
        """SPL <= SR <= OSR on real episodes."""
        path, _ = world.shortest_path(0, 9)
        for trajectory in (path, path[:1], path[:-1]):
            summary = episode_metrics(record(world, trajectory, 9))
            assert summary.spl <= summary.sr <= summary.osr

    def test_non_edge_step(self):
        world = line_world([0.0, 2.0, 4.0])
        with pytest.raises(EvaluationError):
            trajectory_length(world, [0, 2])

    def test_empty_trajectory(self):
        world = line_world([0.0, 2.0])
        with pytest.raises(EvaluationError):
            episode_metrics(EpisodeRecord('e', [], np.zeros(3), 1, world=world))

    def test_unknown_goal(self):
        world = line_world([0.0, 2.0])
        with pytest.raises(EvaluationError):
            episode_metrics(record(world, [0], 7))

    def test_world_argument_overrides_record(self):
        world = line_world([0.0, 2.0])
        detached = EpisodeRecord('e', [0, 1], np.array([2.0, 0, 0]), 1)
        assert episode_metrics(detached, world).sr == 1.0


class TestAggregate:
    """Test suite for aggregation."""

    def test_half_success(self):
        world = line_world([0.0, 2.0, 6.0])
        success = record(world, [0, 1], 1, 'S1', 'a')
        failure = record(world, [0], 2, 'S2', 'b')
        report = aggregate([success, failure])
        assert report.overall.sr == 50.0
        assert report.episodes == 2
        assert report.category_counts == {'S1': 1, 'S2': 1}
        assert report.by_category['S1'].sr == 100.0
        assert report.by_category['S2'].sr == 0.0

    def test_means(self):
        world = line_world([0.0, 2.0, 4.0])
        records = [record(world, [0, 1, 2], 2, episode_id='a'),
                   record(world, [0, 1, 0, 1, 2], 2, episode_id='b')]
        overall = aggregate(records).overall
        assert overall.tl == pytest.approx(6.0)
        assert overall.spl == pytest.approx(0.75)
        assert overall.osr == 100.0

    def test_rows(self):
        world = line_world([0.0, 2.0])
        rows = aggregate([record(world, [0, 1], 1, 'S3')]).rows('hybrid')
        assert [r['label'] for r in rows] == ['hybrid', 'hybrid/S3']
        assert list(rows[0])[2:] == list(METRIC_COLUMNS)

    def test_empty(self):
        with pytest.raises(AggregationError):
            aggregate([])

    def test_summary_count_mismatch(self):
        world = line_world([0.0, 2.0])
        with pytest.raises(AggregationError):
            aggregate([record(world, [0], 1)], [])

    def test_summary_dict_roundtrip(self):
        summary = MetricsSummary(1.0, 2.0, 1.0, 1.0, 0.5)
        assert MetricsSummary.from_dict(summary.to_dict()) == summary


class TestMetricsExporter:
    """Test suite for report files."""

    @pytest.fixture
    def finished(self):
        world = line_world([0.0, 2.0, 6.0])
        records = [record(world, [0, 1], 1, 'S1', 'a'), record(world, [0], 2, 'S2', 'b')]
        return records, [episode_metrics(r) for r in records]

    def test_report_files(self, finished, tmp_path):
        records, summaries = finished
        exporter = MetricsExporter(tmp_path)
        csv_path, json_path = exporter.export_report(aggregate(records, summaries).rows(),
                                                     extra={'suite': None})
        frame = pd.read_csv(csv_path)
        assert list(frame.columns) == ['label', 'episodes', *METRIC_COLUMNS]
        assert frame.loc[0, 'SR'] == 50.0
        payload = json.loads(json_path.read_text(encoding='utf-8'))
        assert payload['suite'] is None
        assert len(payload['rows']) == 3

    def test_identical_runs_identical_bytes(self, finished, tmp_path):
        records, summaries = finished
        rows = aggregate(records, summaries).rows()
        first = MetricsExporter(tmp_path / 'a').export_report(rows)
        second = MetricsExporter(tmp_path / 'b').export_report(rows)
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes()

    def test_episode_files(self, finished, tmp_path):
        records, summaries = finished
        exporter = MetricsExporter(tmp_path)
        table = pd.read_csv(exporter.export_episodes_csv(records, summaries))
        assert table['episode_id'].tolist() == ['a', 'b']
        path = exporter.export_episode(records[0], summaries[0], steps=[{'step': 1}])
        assert path == tmp_path / 'episodes' / 'a.json'
        payload = json.loads(path.read_text(encoding='utf-8'))
        assert payload['metrics']['SR'] == 1.0
        assert payload['steps'] == [{'step': 1}]
        assert payload['trajectory'] == [0, 1]
