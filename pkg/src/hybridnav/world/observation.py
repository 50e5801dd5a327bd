"""
Observation Module

Builds what the agent perceives at a viewpoint: the full channels of the
occupied node and a noisy partial view of every neighbor.
"""

from typing import Optional

import numpy as np

from hybridnav.config import ObservationNoise
from hybridnav.world.models import NeighborStub, Observation, WorldGraph


def observe(
    world: WorldGraph,
    node_id: int,
    noise: Optional[ObservationNoise] = None,
    rng: Optional[np.random.Generator] = None
) -> Observation:
    """
    Observe the world from a node.

    Neighbor stubs carry the ground-truth channels plus zero-mean Gaussian
    noise with the per-channel standard deviation of ``noise``. A zero
    standard deviation leaves that channel exact and draws nothing from
    ``rng``, so repeated calls with the same generator state are identical.

    Args:
        world: Ground-truth world.
        node_id: Node the agent occupies.
        noise: Per-channel stub noise; defaults to none.
        rng: Noise generator; required only when some std is positive.

    Returns:
        Observation with one stub per neighbor, in neighbor-id order.

    Raises:
        LookupFailure: If node_id is unknown.
    """
    node = world.node(node_id)
    noise = noise or ObservationNoise()
    if rng is None:
        rng = np.random.default_rng(0)

    def perturb(values: np.ndarray, std: float) -> np.ndarray:
        if std == 0.0:
            return values.copy()
        return values + rng.normal(0.0, std, size=values.shape)

    stubs = []
    for neighbor_id in world.neighbors(node_id):
        neighbor = world.node(neighbor_id)
        stubs.append(NeighborStub(
            neighbor_id=neighbor_id,
            position=neighbor.position.copy(),
            appearance=perturb(neighbor.appearance, noise.appearance),
            geometry=perturb(neighbor.geometry, noise.geometry),
            semantic=perturb(neighbor.semantic, noise.semantic),
        ))

    return Observation(
        node_id=node_id,
        position=node.position.copy(),
        appearance=node.appearance.copy(),
        geometry=node.geometry.copy(),
        semantic=node.semantic.copy(),
        neighbor_stubs=tuple(stubs),
    )
