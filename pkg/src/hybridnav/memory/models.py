"""
Memory Models Module

Node taxonomy of the topological memory map and the layout of the
concatenated node feature.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from hybridnav.exceptions import ShapeError


STOP_ID = 2 ** 31 - 1
IMAGINATION_ID_START = 1_000_000
LOCATION_CODE_DIM = 5


class NodeKind(str, Enum):
    """Kind of a memory node."""
    VISITED = 'visited'
    CURRENT = 'current'
    NAVIGABLE = 'navigable'
    IMAGINATION = 'imagination'
    STOP = 'stop'


class Completeness(str, Enum):
    """How much of a node's feature has been seen."""
    FULL = 'full'
    PARTIAL = 'partial'
    IMAGINED = 'imagined'


KIND_COMPLETENESS = {
    NodeKind.VISITED: Completeness.FULL,
    NodeKind.CURRENT: Completeness.FULL,
    NodeKind.NAVIGABLE: Completeness.PARTIAL,
    NodeKind.IMAGINATION: Completeness.IMAGINED,
    NodeKind.STOP: Completeness.FULL,
}

# Row order of the policy's node-kind embedding
KIND_INDEX = {
    NodeKind.VISITED: 0,
    NodeKind.CURRENT: 1,
    NodeKind.NAVIGABLE: 2,
    NodeKind.IMAGINATION: 3,
    NodeKind.STOP: 4,
}

REAL_KINDS = (NodeKind.VISITED, NodeKind.CURRENT, NodeKind.NAVIGABLE, NodeKind.STOP)


@dataclass(frozen=True)
class FeatureLayout:
    """Dimensions of the (appearance, geometry, semantic) channels of a feature."""
    appearance_dim: int
    geometry_dim: int
    semantic_dim: int

    @classmethod
    def for_world(cls, world) -> 'FeatureLayout':
        return cls(world.appearance_dim, world.geometry_dim, world.object_vocab_size)

    @property
    def dim(self) -> int:
        return self.appearance_dim + self.geometry_dim + self.semantic_dim

    def join(self, appearance, geometry, semantic) -> np.ndarray:
        """Concatenate channels into one feature vector."""
        feature = np.concatenate([
            np.asarray(appearance, dtype=np.float64),
            np.asarray(geometry, dtype=np.float64),
            np.asarray(semantic, dtype=np.float64),
        ])
        if feature.shape != (self.dim,):
            raise ShapeError(
                f"Feature has length {feature.shape[0]}, expected {self.dim}.",
                details={'length': int(feature.shape[0]), 'expected': self.dim}
            )
        return feature

    def split(self, feature: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Split a feature vector back into (appearance, geometry, semantic)."""
        a = self.appearance_dim
        g = a + self.geometry_dim
        return feature[:a], feature[a:g], feature[g:]


@dataclass
class MemoryNode:
    """
    A node of the memory map.

    Attributes:
        id: World id for real nodes, allocated id for Imagination nodes,
            STOP_ID for the stop node.
        kind: NodeKind.
        feature: Concatenated channel vector.
        position: 3-vector in meters; None for the stop node.
        last_visit_step: Last step the node was occupied (0 if never).
        completeness: Completeness matching the kind.
        depth: Imagination depth the node was generated at (0 for real nodes).
    """
    id: int
    kind: NodeKind
    feature: np.ndarray
    position: Optional[np.ndarray]
    last_visit_step: int = 0
    completeness: Completeness = field(default=None)
    depth: int = 0

    def __post_init__(self):
        if self.completeness is None:
            self.completeness = KIND_COMPLETENESS[self.kind]

    def copy(self) -> 'MemoryNode':
        return MemoryNode(
            self.id, self.kind, self.feature.copy(),
            None if self.position is None else self.position.copy(),
            self.last_visit_step, self.completeness, self.depth,
        )


@dataclass(frozen=True)
class EmbeddingInputs:
    """
    Inputs of a node embedding.

    Attributes:
        node_id: Memory node id.
        kind: NodeKind.
        feature: Concatenated channels.
        location_code: (dx, dy, dz, distance, heading) relative to Current.
        step_code: Last visit step (0 for Navigable, Imagination and Stop).
    """
    node_id: int
    kind: NodeKind
    feature: np.ndarray
    location_code: np.ndarray
    step_code: int
