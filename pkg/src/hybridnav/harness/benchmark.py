"""
Benchmark Module

Builds the evaluation and training episode sets: worlds generated from
disjoint seed blocks (or loaded from a file) and, per world, one episode
per instruction category along an expert shortest path.
"""

import json
import logging
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from hybridnav.config import RunConfig, WorldConfig
from hybridnav.exceptions import InstructionGenerationError
from hybridnav.harness.seeds import derive_seed
from hybridnav.world import (
    Instruction,
    Vocabulary,
    WorldGraph,
    generate_instruction,
    generate_world,
    load_world,
)


logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 500
MIN_HOPS = 2
MAX_RECOMMENDED_EPISODES = 5000


@dataclass(frozen=True)
class Episode:
    """
    One navigation task.

    Attributes:
        episode_id: Unique label ``<world>-<category>-<index>``.
        world_seed: Seed of the generated world; None for a loaded file.
        start: Start node id.
        goal: Goal node id.
        expert_path: Shortest path from start to goal.
        instruction: Instruction describing the expert path.
        seed: Seed of the episode's private random stream.
    """
    episode_id: str
    world_seed: Optional[int]
    start: int
    goal: int
    expert_path: Tuple[int, ...]
    instruction: Instruction
    seed: int

    @property
    def category(self) -> str:
        return self.instruction.category


def world_for_seed(world_config: WorldConfig, seed: Optional[int],
                   world_path: Optional[str] = None) -> WorldGraph:
    """The world an episode runs in: loaded from ``world_path`` or generated."""
    if world_path is not None:
        return _cached_load(str(world_path))
    key = json.dumps(replace(world_config, seed=int(seed)).to_dict(), sort_keys=True)
    return _cached_generate(key)


@lru_cache(maxsize=8)
def _cached_load(path: str) -> WorldGraph:
    return load_world(path)


@lru_cache(maxsize=128)
def _cached_generate(key: str) -> WorldGraph:
    return generate_world(WorldConfig.from_dict(json.loads(key)))


def sample_episode(
    world: WorldGraph,
    category: str,
    rng: np.random.Generator,
    vocabulary: Optional[Vocabulary] = None,
    min_hops: int = MIN_HOPS,
    max_attempts: int = MAX_ATTEMPTS
) -> Tuple[int, int, List[int], Instruction]:
    """
    Draw a start/goal pair whose expert path admits an instruction.

    Returns:
        (start, goal, expert path, instruction).

    Raises:
        InstructionGenerationError: If no pair works within the attempt budget.
    """
    vocabulary = vocabulary or Vocabulary.for_world(world)
    ids = [node.id for node in world.nodes]
    for _ in range(max_attempts):
        start, goal = (int(v) for v in rng.choice(ids, size=2, replace=False))
        path, _ = world.shortest_path(start, goal)
        if len(path) - 1 < min_hops:
            continue
        try:
            instruction = generate_instruction(world, path, category, vocabulary)
        except InstructionGenerationError:
            continue
        return start, goal, path, instruction
    raise InstructionGenerationError(
        f"No {category} episode found in {max_attempts} attempts.",
        details={'category': category, 'attempts': max_attempts, 'world_seed': world.seed}
    )


def build_episodes(
    world: WorldGraph,
    world_seed: Optional[int],
    categories: Sequence[str],
    base_seed: int,
    rounds: int = 1,
    first_index: int = 0
) -> List[Episode]:
    """One episode per category per round in a single world."""
    label = 'file' if world_seed is None else str(world_seed)
    rng = np.random.default_rng(derive_seed(world_seed or 0, base_seed))
    vocabulary = Vocabulary.for_world(world)
    episodes = []
    for round_index in range(rounds):
        for category in categories:
            start, goal, path, instruction = sample_episode(world, category, rng, vocabulary)
            index = first_index + len(episodes)
            episodes.append(Episode(
                episode_id=f"{label}-{category}-{round_index}",
                world_seed=world_seed,
                start=start,
                goal=goal,
                expert_path=tuple(path),
                instruction=instruction,
                seed=derive_seed(base_seed, index),
            ))
    return episodes


def check_benchmark_size(n_episodes: int, max_recommended: int = MAX_RECOMMENDED_EPISODES) -> None:
    """Warn when a run plans more episodes than is practical on one machine."""
    if n_episodes > max_recommended:
        warnings.warn(
            f"Planning {n_episodes} episodes, which exceeds the recommended maximum of "
            f"{max_recommended}. Consider --jobs or an episode cap.",
            UserWarning
        )


def build_benchmark(config: RunConfig) -> Tuple[Dict[Optional[int], WorldGraph], List[Episode]]:
    """
    Evaluation worlds and episodes of a run.

    Generated worlds use seeds ``eval_seed_start .. + eval_worlds - 1``
    with one episode per category each; a world file instead yields
    ``eval_worlds`` rounds of categories in that one world. ``episodes``
    caps the total.
    """
    planned = config.eval_worlds * len(config.categories)
    check_benchmark_size(planned if config.episodes is None else min(planned, config.episodes))
    worlds: Dict[Optional[int], WorldGraph] = {}
    episodes: List[Episode] = []
    if config.world_path is not None:
        world = world_for_seed(config.world, None, config.world_path)
        worlds[None] = world
        episodes = build_episodes(world, None, config.categories, config.episode_seed,
                                  rounds=config.eval_worlds)
    else:
        for seed in range(config.eval_seed_start, config.eval_seed_start + config.eval_worlds):
            world = world_for_seed(config.world, seed)
            worlds[seed] = world
            episodes += build_episodes(world, seed, config.categories, config.episode_seed,
                                       first_index=len(episodes))
            if config.episodes is not None and len(episodes) >= config.episodes:
                break
    if config.episodes is not None:
        episodes = episodes[:config.episodes]
    logger.info("Benchmark: %d worlds, %d episodes", len(worlds), len(episodes))
    return worlds, episodes


def training_worlds(config: RunConfig) -> List[WorldGraph]:
    """Training worlds, seeds ``training.seed_start .. + training.worlds - 1``."""
    start = config.training.seed_start
    return [world_for_seed(config.world, seed) for seed in range(start, start + config.training.worlds)]
