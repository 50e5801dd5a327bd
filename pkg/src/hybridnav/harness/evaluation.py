"""
Evaluation Module

Runs a benchmark's episodes, serially or in a worker pool, and scores
them. Workers rebuild worlds from their seeds and load the agent once in
the pool initializer; results come back in episode order, so reports do
not depend on the number of workers.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

from hybridnav.config import AgentConfig, RunConfig
from hybridnav.evalmetrics import AggregateReport, MetricsSummary, aggregate, episode_metrics
from hybridnav.exceptions import ConfigurationError
from hybridnav.harness.agent import AgentBundle
from hybridnav.harness.benchmark import Episode, world_for_seed
from hybridnav.harness.runner import EpisodeResult, run_episode
from hybridnav.performance import ParallelProcessor, ProgressTracker


logger = logging.getLogger(__name__)

_WORKER: Dict[str, object] = {}


def _init_worker(run_config: RunConfig, checkpoint: Optional[str],
                 bundle: Optional[AgentBundle]) -> None:
    _WORKER['run'] = run_config
    _WORKER['bundle'] = bundle if bundle is not None else AgentBundle.load(checkpoint)


def _run_task(task: Tuple[Episode, AgentConfig]) -> EpisodeResult:
    episode, agent_config = task
    run: RunConfig = _WORKER['run']
    world = world_for_seed(run.world, episode.world_seed, run.world_path)
    result = run_episode(world, episode, _WORKER['bundle'], agent_config)
    result.record.world = None
    return result


def evaluate_episodes(
    run_config: RunConfig,
    episodes: Sequence[Episode],
    agent_config: Optional[AgentConfig] = None,
    bundle: Optional[AgentBundle] = None,
    checkpoint: Optional[str] = None,
    jobs: int = 1,
    show_progress: bool = False
) -> List[EpisodeResult]:
    """
    Run episodes and return their results in order.

    Args:
        run_config: Run whose worlds the episodes live in.
        episodes: Episodes to run.
        agent_config: Agent knobs; ``run_config.agent`` by default.
        bundle: In-memory agent.
        checkpoint: Checkpoint loaded by each worker when no bundle is given.
        jobs: Worker processes.
        show_progress: Show a progress bar.

    Raises:
        ConfigurationError: If neither a bundle nor a checkpoint is given.
    """
    if bundle is None and checkpoint is None:
        raise ConfigurationError(
            "Evaluation needs a trained agent: pass --checkpoint or train one first.",
            details={'checkpoint': None}
        )
    agent_config = agent_config or run_config.agent
    tasks = [(episode, agent_config) for episode in episodes]
    processor = ParallelProcessor(jobs, _init_worker, (run_config, checkpoint, bundle))
    with ProgressTracker(len(tasks), "Episodes", show_progress, unit='episode') as tracker:
        results = processor.map(_run_task, tasks, on_result=lambda i, r: tracker.update(1))

    for episode, result in zip(episodes, results):
        result.record.world = world_for_seed(run_config.world, episode.world_seed,
                                             run_config.world_path)
    aborted = sum(r.record.aborted for r in results)
    if aborted:
        logger.warning("%d of %d episodes aborted", aborted, len(results))
    return results


def score_results(results: Sequence[EpisodeResult]) -> Tuple[List[MetricsSummary], AggregateReport]:
    """Per-episode metrics and their aggregate."""
    records = [r.record for r in results]
    summaries = [episode_metrics(record) for record in records]
    return summaries, aggregate(records, summaries)
