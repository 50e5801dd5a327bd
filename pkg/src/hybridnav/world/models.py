"""
World Models Module

Data structures of the ground-truth environment: positioned viewpoints
with appearance, geometry and semantic channels, the weighted graph that
connects them, what the agent observes at a viewpoint and the instruction
it follows.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from hybridnav.exceptions import LookupFailure, ValidationError
from hybridnav.graph import adjacency_from_edges, euclidean, lexicographic_shortest_path


NORM_TOLERANCE = 1e-9
LENGTH_TOLERANCE = 1e-9

INSTRUCTION_CATEGORIES = ('S1', 'S2', 'S3', 'plain')


def _frozen(values: Sequence[float]) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class WorldNode:
    """
    A viewpoint of the world.

    Attributes:
        id: Node id.
        position: 3-vector in meters.
        appearance: Unit-norm vector of dimension D (RGB stand-in).
        geometry: Vector of dimension D_g (depth stand-in).
        semantic: Probability vector over the object vocabulary.
        room_type: Room-type label.
        room_index: Index of the room cell the node belongs to.
    """
    id: int
    position: np.ndarray
    appearance: np.ndarray
    geometry: np.ndarray
    semantic: np.ndarray
    room_type: int
    room_index: int = 0

    def __post_init__(self):
        for name in ('position', 'appearance', 'geometry', 'semantic'):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def feature(self) -> np.ndarray:
        """Concatenated (appearance, geometry, semantic) channels."""
        return np.concatenate([self.appearance, self.geometry, self.semantic])


@dataclass(frozen=True)
class WorldGraph:
    """
    Ground-truth discrete environment.

    The graph is immutable after construction and may be shared by
    parallel episodes.

    Attributes:
        nodes: WorldNode list indexed by id order.
        edges: (node_id, node_id, length in meters) triples, a < b.
        room_count: Number of room cells.
        object_vocab_size: Size of the object vocabulary.
        room_vocab_size: Number of room types.
        object_priors: room type -> objects of its generation prior.
        seed: Seed the world was generated from, when generated.
    """
    nodes: Tuple[WorldNode, ...]
    edges: Tuple[Tuple[int, int, float], ...]
    room_count: int
    object_vocab_size: int
    room_vocab_size: int
    object_priors: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'nodes', tuple(self.nodes))
        object.__setattr__(
            self, 'edges',
            tuple((min(a, b), max(a, b), float(length)) for a, b, length in self.edges)
        )

    @cached_property
    def _index(self) -> Dict[int, WorldNode]:
        return {node.id: node for node in self.nodes}

    @cached_property
    def adjacency(self) -> Dict[int, Dict[int, float]]:
        """node -> {neighbor: edge length}."""
        adjacency = adjacency_from_edges(self.edges)
        for node in self.nodes:
            adjacency.setdefault(node.id, {})
        return adjacency

    @property
    def appearance_dim(self) -> int:
        return len(self.nodes[0].appearance)

    @property
    def geometry_dim(self) -> int:
        return len(self.nodes[0].geometry)

    @property
    def feature_dim(self) -> int:
        return self.appearance_dim + self.geometry_dim + self.object_vocab_size

    def node(self, node_id: int) -> WorldNode:
        """
        Look up a node.

        Raises:
            LookupFailure: If the id is unknown.
        """
        try:
            return self._index[node_id]
        except (KeyError, TypeError):
            raise LookupFailure(
                f"Unknown world node id: {node_id}",
                details={'node_id': node_id, 'node_count': len(self.nodes)}
            )

    def has_node(self, node_id: int) -> bool:
        return node_id in self._index

    def neighbors(self, node_id: int) -> List[int]:
        """Sorted neighbor ids of a node."""
        self.node(node_id)
        return sorted(self.adjacency[node_id])

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adjacency.get(a, {})

    def edge_length(self, a: int, b: int) -> float:
        """
        Length of the edge between two nodes.

        Raises:
            LookupFailure: If the nodes are not adjacent.
        """
        try:
            return self.adjacency[a][b]
        except KeyError:
            raise LookupFailure(
                f"Nodes {a} and {b} are not adjacent.", details={'a': a, 'b': b}
            )

    def shortest_path(self, a: int, b: int) -> Tuple[List[int], float]:
        """
        Minimal-length path between two nodes.

        Ties are broken by the lexicographically smallest node-id sequence.

        Raises:
            LookupFailure: If either node is unknown.
            NoPathError: If the nodes are disconnected.
        """
        self.node(a)
        self.node(b)
        return lexicographic_shortest_path(self.adjacency, a, b)

    def to_networkx(self) -> nx.Graph:
        """Undirected networkx view with positions and room types as attributes."""
        graph = nx.Graph()
        for node in self.nodes:
            graph.add_node(node.id, position=tuple(node.position), room_type=node.room_type)
        for a, b, length in self.edges:
            graph.add_edge(a, b, length=length)
        return graph

    def translated(self, offset: Sequence[float]) -> 'WorldGraph':
        """Copy of the world rigidly translated by ``offset`` meters."""
        shift = np.asarray(offset, dtype=np.float64)
        nodes = [
            WorldNode(n.id, n.position + shift, n.appearance, n.geometry,
                      n.semantic, n.room_type, n.room_index)
            for n in self.nodes
        ]
        positions = {n.id: n.position for n in nodes}
        edges = [(a, b, euclidean(positions[a], positions[b])) for a, b, _ in self.edges]
        return WorldGraph(nodes, edges, self.room_count, self.object_vocab_size,
                          self.room_vocab_size, dict(self.object_priors), self.seed)

    def validate(self) -> None:
        """
        Check every structural invariant.

        Raises:
            ValidationError: On duplicate ids, self-loops, asymmetric or
                inconsistent edges, disconnection or invalid channels.
        """
        check_world_invariants(self)


def check_world_invariants(world: WorldGraph, edge_lines: Optional[List[int]] = None,
                           node_lines: Optional[List[int]] = None) -> None:
    """
    Validate a world, reporting the source line of the offending entry.

    Args:
        world: World to check.
        edge_lines: Optional source line per edge (for loaded files).
        node_lines: Optional source line per node (for loaded files).

    Raises:
        ValidationError: On the first violated invariant.
    """
    def node_line(i):
        return node_lines[i] if node_lines else None

    def edge_line(i):
        return edge_lines[i] if edge_lines else None

    if not world.nodes:
        raise ValidationError("World has no nodes.", details={'line': None})

    ids = set()
    for i, node in enumerate(world.nodes):
        if node.id in ids:
            raise ValidationError(
                f"Duplicate node id {node.id}.", details={'node_id': node.id, 'line': node_line(i)}
            )
        ids.add(node.id)
        if node.position.shape != (3,):
            raise ValidationError(
                f"Node {node.id} position must be a 3-vector.",
                details={'node_id': node.id, 'line': node_line(i)}
            )
        norm = float(np.linalg.norm(node.appearance))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValidationError(
                f"Node {node.id} appearance is not unit-norm (norm {norm!r}).",
                details={'node_id': node.id, 'norm': norm, 'line': node_line(i)}
            )
        if len(node.semantic) != world.object_vocab_size:
            raise ValidationError(
                f"Node {node.id} semantic length {len(node.semantic)} does not match "
                f"object_vocab_size {world.object_vocab_size}.",
                details={'node_id': node.id, 'line': node_line(i)}
            )
        total = float(node.semantic.sum())
        if np.any(node.semantic < 0) or abs(total - 1.0) > NORM_TOLERANCE:
            raise ValidationError(
                f"Node {node.id} semantic is not a probability vector (sum {total!r}).",
                details={'node_id': node.id, 'sum': total, 'line': node_line(i)}
            )
        if not 0 <= node.room_type < world.room_vocab_size:
            raise ValidationError(
                f"Node {node.id} room_type {node.room_type} outside room vocabulary.",
                details={'node_id': node.id, 'line': node_line(i)}
            )
        if (len(node.appearance) != world.appearance_dim
                or len(node.geometry) != world.geometry_dim):
            raise ValidationError(
                f"Node {node.id} channel dimensions differ from the first node.",
                details={'node_id': node.id, 'line': node_line(i)}
            )

    seen = {}
    positions = {node.id: node.position for node in world.nodes}
    for i, (a, b, length) in enumerate(world.edges):
        if a not in ids or b not in ids:
            raise ValidationError(
                f"Edge ({a}, {b}) references an unknown node.",
                details={'edge': [a, b], 'line': edge_line(i)}
            )
        if a == b:
            raise ValidationError(
                f"Self-loop on node {a}.", details={'edge': [a, b], 'line': edge_line(i)}
            )
        key = (min(a, b), max(a, b))
        if key in seen and seen[key] != length:
            raise ValidationError(
                f"Edge ({a}, {b}) listed with different lengths.",
                details={'edge': [a, b], 'line': edge_line(i)}
            )
        seen[key] = length
        expected = euclidean(positions[a], positions[b])
        if abs(length - expected) > LENGTH_TOLERANCE:
            raise ValidationError(
                f"Edge ({a}, {b}) length {length!r} differs from Euclidean distance {expected!r}.",
                details={'edge': [a, b], 'length': length, 'expected': expected,
                         'line': edge_line(i)}
            )
        if length <= 0.0:
            raise ValidationError(
                f"Edge ({a}, {b}) has non-positive length.",
                details={'edge': [a, b], 'line': edge_line(i)}
            )

    if not nx.is_connected(world.to_networkx()):
        raise ValidationError(
            "World graph is not connected.",
            details={'components': nx.number_connected_components(world.to_networkx()),
                     'line': None}
        )


@dataclass(frozen=True)
class NeighborStub:
    """Partial view of a neighbor from the occupied node."""
    neighbor_id: int
    position: np.ndarray
    appearance: np.ndarray
    geometry: np.ndarray
    semantic: np.ndarray

    @property
    def feature(self) -> np.ndarray:
        return np.concatenate([self.appearance, self.geometry, self.semantic])


@dataclass(frozen=True)
class Observation:
    """
    What the agent perceives at a node.

    Full channels for the occupied node and one stub per neighbor.
    """
    node_id: int
    position: np.ndarray
    appearance: np.ndarray
    geometry: np.ndarray
    semantic: np.ndarray
    neighbor_stubs: Tuple[NeighborStub, ...]

    @property
    def feature(self) -> np.ndarray:
        return np.concatenate([self.appearance, self.geometry, self.semantic])


@dataclass(frozen=True)
class Instruction:
    """
    A navigation instruction.

    Attributes:
        tokens: Token sequence over the fixed vocabulary.
        category: One of S1, S2, S3, plain.
        goal_node_id: Last node of the expert path (hidden from the agent).
    """
    tokens: Tuple[str, ...]
    category: str
    goal_node_id: int

    @property
    def text(self) -> str:
        return " ".join(self.tokens)
