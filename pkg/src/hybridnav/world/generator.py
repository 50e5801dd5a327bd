"""
World Generator Module

Procedural synthetic indoor environments. Rooms are laid out on a 2D grid
of square cells at z = 0; viewpoints are jittered uniformly inside their
room's cell, connected inside the room by a minimum spanning tree plus
short chords, and rooms are joined by doors between adjacent cells.

Every room type owns a base appearance vector and a prior over a few
objects, so rooms and objects are correlated the way kitchens and fridges
are. Generation is a pure function of the configuration: the same seed
gives a bit-identical world.
"""

import logging
import math
from typing import Dict, List, Tuple

import networkx as nx
import numpy as np

from hybridnav.config import WorldConfig
from hybridnav.graph import euclidean
from hybridnav.world.models import WorldGraph, WorldNode


logger = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1

CHORD_LENGTH = 2.0
APPEARANCE_JITTER = 0.5
PRIOR_CONCENTRATION = 5.0
BACKGROUND_CONCENTRATION = 0.2


def world_rng(seed: int) -> np.random.Generator:
    """Generator for any 64-bit seed, negative values included."""
    return np.random.default_rng(int(seed) & SEED_MASK)


def _room_cells(rooms: int) -> List[Tuple[int, int]]:
    width = math.ceil(math.sqrt(rooms))
    return [(r % width, r // width) for r in range(rooms)]


def _adjacent_room_pairs(cells: List[Tuple[int, int]]) -> List[Tuple[int, int]]:
    index = {cell: r for r, cell in enumerate(cells)}
    pairs = []
    for r, (cx, cy) in enumerate(cells):
        for neighbor in ((cx + 1, cy), (cx, cy + 1)):
            if neighbor in index:
                pairs.append((r, index[neighbor]))
    return pairs


def _door_pairs(pairs: List[Tuple[int, int]], rooms: int, door_probability: float,
                rng: np.random.Generator) -> List[Tuple[int, int]]:
    """Spanning set of doors (random Kruskal order) plus random extra doors."""
    order = rng.permutation(len(pairs))
    parent = list(range(rooms))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    doors = []
    extras = rng.random(len(pairs))
    for k in order:
        a, b = pairs[k]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            doors.append((a, b))
        elif extras[k] < door_probability:
            doors.append((a, b))
    return sorted(doors)


def generate_world(config: WorldConfig) -> WorldGraph:
    """
    Generate a connected synthetic indoor world.

    Args:
        config: WorldConfig (validated on construction).

    Returns:
        WorldGraph whose nodes are numbered room by room.

    Raises:
        ConfigurationError: Raised by WorldConfig for zero vocabularies or
            dimensions.

    Example:
        >>> world = generate_world(WorldConfig(rooms=4, nodes_per_room=5, seed=7))
        >>> len(world.nodes)
        20
    """
    rng = world_rng(config.seed)
    cells = _room_cells(config.rooms)

    permutation = rng.permutation(config.room_vocab_size)
    room_types = [int(permutation[r % config.room_vocab_size]) for r in range(config.rooms)]

    bases = rng.normal(size=(config.room_vocab_size, config.appearance_dim))
    priors: Dict[int, Tuple[int, ...]] = {}
    for room_type in range(config.room_vocab_size):
        chosen = rng.choice(config.object_vocab_size, size=config.objects_per_room, replace=False)
        priors[room_type] = tuple(sorted(int(c) for c in chosen))

    nodes: List[WorldNode] = []
    members: Dict[int, List[int]] = {}
    for room, (cx, cy) in enumerate(cells):
        room_type = room_types[room]
        alpha = np.full(config.object_vocab_size, BACKGROUND_CONCENTRATION)
        alpha[list(priors[room_type])] += PRIOR_CONCENTRATION
        for _ in range(config.nodes_per_room):
            node_id = len(nodes)
            offset = rng.uniform(0.0, config.cell_size, size=2)
            position = np.array([cx * config.cell_size + offset[0],
                                 cy * config.cell_size + offset[1], 0.0])
            appearance = bases[room_type] + APPEARANCE_JITTER * rng.normal(size=config.appearance_dim)
            appearance = appearance / np.linalg.norm(appearance)
            geometry = rng.normal(size=config.geometry_dim)
            semantic = rng.dirichlet(alpha)
            semantic = semantic / semantic.sum()
            nodes.append(WorldNode(node_id, position, appearance, geometry, semantic,
                                   room_type, room))
            members.setdefault(room, []).append(node_id)

    edges: Dict[Tuple[int, int], float] = {}

    def add_edge(a: int, b: int) -> None:
        key = (min(a, b), max(a, b))
        edges[key] = euclidean(nodes[a].position, nodes[b].position)

    for room, ids in members.items():
        complete = nx.Graph()
        complete.add_nodes_from(ids)
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                complete.add_edge(a, b, weight=euclidean(nodes[a].position, nodes[b].position))
        for a, b in nx.minimum_spanning_tree(complete).edges():
            add_edge(a, b)
        for a, b, data in complete.edges(data=True):
            if data['weight'] <= CHORD_LENGTH:
                add_edge(a, b)

    for r1, r2 in _door_pairs(_adjacent_room_pairs(cells), config.rooms,
                              config.door_probability, rng):
        a, b = min(
            ((a, b) for a in members[r1] for b in members[r2]),
            key=lambda pair: (euclidean(nodes[pair[0]].position, nodes[pair[1]].position), pair)
        )
        add_edge(a, b)

    world = WorldGraph(
        nodes=nodes,
        edges=[(a, b, length) for (a, b), length in sorted(edges.items())],
        room_count=config.rooms,
        object_vocab_size=config.object_vocab_size,
        room_vocab_size=config.room_vocab_size,
        object_priors=priors,
        seed=config.seed,
    )
    world.validate()
    logger.debug("Generated world seed=%s with %d nodes and %d edges",
                 config.seed, len(world.nodes), len(world.edges))
    return world
