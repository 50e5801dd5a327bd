"""
Metrics Exporter Module

Writes per-episode rows and aggregate tables as CSV and JSON. Metric
columns always come in the order NE, TL, SR, OSR, SPL. Reports carry no
timestamps, so identical runs produce byte-identical files.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd

from hybridnav.evalmetrics.models import METRIC_COLUMNS, EpisodeRecord, MetricsSummary
from hybridnav.exceptions import ExportError


def episode_frame(records: Sequence[EpisodeRecord],
                  summaries: Sequence[MetricsSummary]) -> pd.DataFrame:
    """One row per episode: id, category, then the metrics."""
    rows = [
        {'episode_id': r.episode_id, 'category': r.category, **s.to_dict()}
        for r, s in zip(records, summaries)
    ]
    return pd.DataFrame(rows, columns=['episode_id', 'category', *METRIC_COLUMNS])


def report_frame(rows: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    """Aggregate table rows: label, episode count, then the metrics."""
    return pd.DataFrame(list(rows), columns=['label', 'episodes', *METRIC_COLUMNS])


class MetricsExporter:
    """
    Writes report.csv, report.json and episodes/<id>.json into a directory.

    Example:
        >>> exporter = MetricsExporter("runs/eval")
        >>> exporter.export_report(report.rows(), extra={'suite': None})
        >>> exporter.export_episode(record, summary, steps)
    """

    def __init__(self, output_dir):
        self.output_dir = Path(output_dir)

    def _write(self, path: Path, text: str) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding='utf-8')
        except OSError as e:
            raise ExportError(f"Failed to write {path}: {e}", details={'path': str(path)})
        return path

    def export_report(self, rows: Sequence[Dict[str, Any]],
                      extra: Dict[str, Any] = None) -> List[Path]:
        """Write the aggregate table as report.csv and report.json."""
        frame = report_frame(rows)
        csv_path = self._write(self.output_dir / 'report.csv',
                               frame.to_csv(index=False, float_format='%.6f'))
        payload = {**(extra or {}), 'rows': frame.to_dict(orient='records')}
        json_path = self._write(self.output_dir / 'report.json',
                                json.dumps(payload, indent=2, sort_keys=False) + "\n")
        return [csv_path, json_path]

    def export_episodes_csv(self, records: Sequence[EpisodeRecord],
                            summaries: Sequence[MetricsSummary]) -> Path:
        """Per-episode metrics table as episodes.csv."""
        frame = episode_frame(records, summaries)
        return self._write(self.output_dir / 'episodes.csv',
                           frame.to_csv(index=False, float_format='%.6f'))

    def export_episode(self, record: EpisodeRecord, summary: MetricsSummary = None,
                       steps: Sequence[Dict[str, Any]] = ()) -> Path:
        """One episode with its metrics and step log as episodes/<id>.json."""
        payload = record.to_dict()
        payload['metrics'] = summary.to_dict() if summary is not None else None
        payload['steps'] = list(steps)
        return self._write(self.output_dir / 'episodes' / f"{record.episode_id}.json",
                           json.dumps(payload, indent=2) + "\n")
