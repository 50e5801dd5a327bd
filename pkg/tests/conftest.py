"""
Shared fixtures for the hybridnav test suite.

Worlds are kept small so that the policy, the imagination tree and the
episode loop run in well under a second per test.
"""

import matplotlib
matplotlib.use('Agg')

import numpy as np
import pytest

from hybridnav.config import (
    AgentConfig,
    ImaginerConfig,
    PolicyConfig,
    RunConfig,
    TrainingConfig,
    WorldConfig,
)
from hybridnav.harness import AgentBundle, build_episodes
from hybridnav.harness.runner import new_memory
from hybridnav.world import generate_world, observe


SMALL_POLICY = PolicyConfig(d_model=16, n_heads=2, instruction_layers=1, graph_layers=1,
                            ffn_multiplier=2, max_tokens=64, seed=0)


@pytest.fixture(scope='session')
def world_config():
    """Four rooms of four viewpoints."""
    return WorldConfig(rooms=4, nodes_per_room=4, seed=7)


@pytest.fixture(scope='session')
def world(world_config):
    return generate_world(world_config)


@pytest.fixture(scope='session')
def policy_config():
    return SMALL_POLICY


@pytest.fixture
def agent_config():
    return AgentConfig(max_steps=4, imaginer=ImaginerConfig('oracle', 0.0, 0))


@pytest.fixture
def memory(world, agent_config):
    """Memory after observing node 0 at step 1."""
    memory = new_memory(world, agent_config)
    memory.integrate_observation(observe(world, 0), step=1)
    return memory


@pytest.fixture(scope='session')
def bundle(world):
    """Untrained agent sized for the shared world."""
    return AgentBundle.initial(world, SMALL_POLICY, hidden=16)


@pytest.fixture(scope='session')
def episodes(world, world_config):
    return build_episodes(world, world_config.seed, ('S1', 'plain'), base_seed=0)


@pytest.fixture
def run_config():
    """Tiny run: two evaluation worlds, two training worlds, short schedules."""
    return RunConfig(
        world=WorldConfig(rooms=4, nodes_per_room=4),
        eval_seed_start=100,
        eval_worlds=2,
        categories=('S1', 'plain'),
        episode_seed=0,
        agent=AgentConfig(max_steps=3, imaginer=ImaginerConfig('oracle', 0.0, 0)),
        policy=SMALL_POLICY,
        training=TrainingConfig(worlds=2, seed_start=0, epochs=1, batch=8,
                                waypoint_epochs=1, room_epochs=2, imaginer_epochs=1),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)
