"""
Ablation Module

Evaluates families of agent configurations on the same worlds,
instructions and seeds:

    - memory_type: reality, imagination, reality+imagination
    - imagination_range: (M, N-bar) in (0, 0), (1, 4), (2, 4), (2, 8)
    - auxiliary_models: none, room, waypoint, room+waypoint
    - decision_weight: dynamic, fixed 0.5
    - instruction_split: S1, S2, S3
    - imaginer_noise: oracle noise 0, 0.25, 0.5, 1.0
"""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from hybridnav.config import AgentConfig, ImaginerConfig, RunConfig
from hybridnav.evalmetrics import AggregateReport
from hybridnav.exceptions import ConfigurationError
from hybridnav.harness.agent import AgentBundle
from hybridnav.harness.analysis import (
    BOOTSTRAP_RESAMPLES,
    GapEstimate,
    bootstrap_gap,
    spearman_trend,
)
from hybridnav.harness.benchmark import build_benchmark
from hybridnav.harness.evaluation import evaluate_episodes, score_results


logger = logging.getLogger(__name__)

FIXED_GAMMA = 0.5
IMAGINER_NOISE_LEVELS = (0.0, 0.25, 0.5, 1.0)

# label -> AgentConfig overrides; 'category' filters episodes instead
SUITES: Dict[str, List[Tuple[str, Dict[str, Any]]]] = {
    'memory_type': [
        ('reality', {'memory_type': 'reality'}),
        ('imagination', {'memory_type': 'imagination'}),
        ('reality+imagination', {'memory_type': 'hybrid'}),
    ],
    'imagination_range': [
        (f"M={m},N={n}", {'max_depth': m, 'imagination_cap': n})
        for m, n in ((0, 0), (1, 4), (2, 4), (2, 8))
    ],
    'auxiliary_models': [
        ('none', {'use_room_model': False, 'use_waypoint_model': False}),
        ('room', {'use_room_model': True, 'use_waypoint_model': False}),
        ('waypoint', {'use_room_model': False, 'use_waypoint_model': True}),
        ('room+waypoint', {'use_room_model': True, 'use_waypoint_model': True}),
    ],
    'decision_weight': [
        ('dynamic', {'gamma_mode': 'dynamic'}),
        (f"fixed {FIXED_GAMMA}", {'gamma_mode': 'fixed', 'gamma_value': FIXED_GAMMA}),
    ],
    'instruction_split': [(c, {'category': c}) for c in ('S1', 'S2', 'S3')],
    'imaginer_noise': [(f"noise={s}", {'imaginer_noise': s}) for s in IMAGINER_NOISE_LEVELS],
}


@dataclass
class AblationRow:
    label: str
    agent: AgentConfig
    report: AggregateReport
    successes: List[float]
    gammas: List[List[float]] = field(default_factory=list)


@dataclass
class AblationReport:
    """
    Rows of one suite.

    Attributes:
        suite: Suite name.
        rows: One row per configuration, in suite order.
        durations: Wall-clock seconds per row label.
        trend: Spearman trend of SR against the swept noise
            (imaginer_noise only).
        gaps: Bootstrap SR gap of every row against the first one.
    """
    suite: str
    rows: List[AblationRow]
    durations: Dict[str, float] = field(default_factory=dict)
    trend: Optional[float] = None
    gaps: Dict[str, GapEstimate] = field(default_factory=dict)

    def table(self) -> List[Dict[str, Any]]:
        """Report rows: label, episode count, NE, TL, SR, OSR, SPL."""
        return [{'label': row.label, 'episodes': row.report.episodes,
                 **row.report.overall.to_dict()} for row in self.rows]

    def to_dict(self) -> Dict[str, Any]:
        """Deterministic content; durations are left to run metadata."""
        return {
            'suite': self.suite,
            'rows': self.table(),
            'trend': self.trend,
            'gaps': {label: gap.to_dict() for label, gap in self.gaps.items()},
        }


def suite_rows(suite: str, base: AgentConfig) -> List[Tuple[str, AgentConfig, Optional[str]]]:
    """
    (label, agent config, category filter) of every row of a suite.

    Raises:
        ConfigurationError: If the suite is unknown.
    """
    if suite not in SUITES:
        raise ConfigurationError(f"Unknown ablation suite '{suite}'.",
                                 details={'suite': suite, 'choices': sorted(SUITES)})
    rows = []
    for label, overrides in SUITES[suite]:
        overrides = dict(overrides)
        category = overrides.pop('category', None)
        if 'imaginer_noise' in overrides:
            noise = overrides.pop('imaginer_noise')
            overrides['imaginer'] = ImaginerConfig('oracle', noise, base.imaginer.seed)
        rows.append((label, replace(base, **overrides), category))
    return rows


def run_ablation(
    suite: str,
    run_config: RunConfig,
    bundle: Optional[AgentBundle] = None,
    checkpoint: Optional[str] = None,
    jobs: int = 1,
    show_progress: bool = False
) -> AblationReport:
    """
    Evaluate every row of a suite on one shared benchmark.

    Raises:
        ConfigurationError: On an unknown suite or without a trained agent.
    """
    rows_spec = suite_rows(suite, run_config.agent)
    if bundle is None and checkpoint is None:
        raise ConfigurationError(
            "Ablation needs a trained checkpoint.", details={'suite': suite, 'checkpoint': None}
        )
    _, episodes = build_benchmark(run_config)

    rows: List[AblationRow] = []
    durations: Dict[str, float] = {}
    for label, agent, category in rows_spec:
        selected = [e for e in episodes if category is None or e.category == category]
        if not selected:
            raise ConfigurationError(
                f"No {category} episodes in the benchmark for row '{label}'.",
                details={'suite': suite, 'row': label}
            )
        started = time.perf_counter()
        results = evaluate_episodes(run_config, selected, agent, bundle, checkpoint, jobs,
                                    show_progress)
        durations[label] = time.perf_counter() - started
        summaries, report = score_results(results)
        rows.append(AblationRow(label, agent, report, [s.sr for s in summaries],
                                [r.gammas for r in results]))
        logger.info("%s / %s: SR %.1f%% SPL %.3f over %d episodes",
                    suite, label, report.overall.sr, report.overall.spl, report.episodes)

    ablation = AblationReport(suite, rows, durations)
    if suite != 'instruction_split':
        first = rows[0]
        for row in rows[1:]:
            ablation.gaps[row.label] = bootstrap_gap(first.successes, row.successes,
                                                     resamples=BOOTSTRAP_RESAMPLES)
    if suite == 'imaginer_noise':
        ablation.trend = spearman_trend(list(IMAGINER_NOISE_LEVELS),
                                        [row.report.overall.sr for row in rows])
    return ablation
