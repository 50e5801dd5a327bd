"""
Episode Runner Module

The navigation loop. Every step observes, imagines, decides and moves:

    observe -> integrate_observation -> imagine (init, expand, merge)
            -> encode -> score -> fuse -> select_action -> follow route

An episode ends on a Stop action or after ``max_steps`` actions. Module
errors abort the episode and are kept as a diagnostic on its record.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import torch

from hybridnav.config import AgentConfig
from hybridnav.evalmetrics import EpisodeRecord
from hybridnav.exceptions import HybridNavError
from hybridnav.harness.agent import AgentBundle
from hybridnav.harness.benchmark import Episode
from hybridnav.harness.seeds import derive_seed
from hybridnav.imagination import imagine
from hybridnav.memory import FeatureLayout, MemoryMap
from hybridnav.policy import decide, encode_instruction, select_action
from hybridnav.world import WorldGraph, observe


logger = logging.getLogger(__name__)


@dataclass
class StepLog:
    """Diagnostics of one decision step."""
    step: int
    node_id: int
    gamma: float
    node_counts: Dict[str, int]
    scores: Dict[str, Dict[str, float]]
    action: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'step': self.step,
            'node_id': self.node_id,
            'gamma': self.gamma,
            'node_counts': dict(self.node_counts),
            'scores': self.scores,
            'action': self.action,
        }


@dataclass
class EpisodeResult:
    """A finished episode with its step log."""
    record: EpisodeRecord
    steps: List[StepLog] = field(default_factory=list)

    @property
    def gammas(self) -> List[float]:
        return [step.gamma for step in self.steps]


def new_memory(world: WorldGraph, config: AgentConfig) -> MemoryMap:
    """Empty memory map sized for a world."""
    return MemoryMap(FeatureLayout.for_world(world), config.imagination_cap, config.tau,
                     config.position_scale)


def run_episode(
    world: WorldGraph,
    episode: Episode,
    bundle: AgentBundle,
    config: AgentConfig,
    seed: Optional[int] = None
) -> EpisodeResult:
    """
    Navigate one episode.

    Args:
        world: World the episode runs in.
        episode: Start node, instruction and goal.
        bundle: Trained agent.
        config: Agent knobs.
        seed: Random stream seed; the episode's own seed by default.

    Returns:
        EpisodeResult whose record holds every traversed node.

    Example:
        >>> result = run_episode(world, episode, bundle, AgentConfig(max_steps=0))
        >>> result.record.trajectory == [episode.start]
        True
    """
    seed = episode.seed if seed is None else seed
    action_rng = np.random.default_rng(derive_seed(seed, 0))
    observation_rng = np.random.default_rng(derive_seed(seed, 1))
    imaginer_seed = derive_seed(seed, 2)

    trajectory = [episode.start]
    steps: List[StepLog] = []
    diagnostic = None
    policy = bundle.policy

    try:
        memory = new_memory(world, config)
        memory.integrate_observation(
            observe(world, episode.start, config.observation_noise, observation_rng), step=1
        )
        if config.max_steps > 0:
            imaginer, waypoints, weights = bundle.components(world, config, imaginer_seed)
            with torch.no_grad():
                instruction = encode_instruction(episode.instruction, policy)
                for step in range(1, config.max_steps + 1):
                    if config.imagination_enabled:
                        imagine(memory, imaginer, config.history_length, config.max_depth,
                                step, waypoints, weights)
                    scores = decide(memory, instruction, policy, step, config.gamma_mode,
                                    config.gamma_value, config.memory_type)
                    action = select_action(scores.fused, memory, config.action_mode,
                                           action_rng, config.temperature)
                    steps.append(StepLog(step, memory.current_id, float(scores.gamma),
                                         memory.kind_counts(), scores.as_floats(),
                                         action.to_dict()))
                    if action.is_stop:
                        break
                    for node_id in action.route[1:]:
                        trajectory.append(node_id)
                        memory.integrate_observation(
                            observe(world, node_id, config.observation_noise, observation_rng),
                            step=step + 1,
                        )
    except HybridNavError as e:
        diagnostic = e.to_dict()
        logger.warning("Episode %s aborted at node %s: %s",
                       episode.episode_id, trajectory[-1], e.message)

    record = EpisodeRecord(
        episode_id=episode.episode_id,
        trajectory=trajectory,
        stop_position=world.node(trajectory[-1]).position.copy(),
        goal_node_id=episode.goal,
        category=episode.category,
        world=world,
        diagnostic=diagnostic,
    )
    logger.debug("Episode %s finished after %d steps at node %s",
                 episode.episode_id, len(steps), trajectory[-1])
    return EpisodeResult(record, steps)
