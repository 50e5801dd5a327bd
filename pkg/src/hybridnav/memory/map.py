"""
Memory Map Module

The agent's topological memory: typed nodes with features and positions,
Euclidean edges, and a stop node connected to every other node.

Real nodes keep their world ids. Imagination nodes get ids from
IMAGINATION_ID_START upward and the stop node is STOP_ID. Edges to the
stop node are implicit: it has no position, so it is reported as a
neighbor of every node but stores no length.
"""

import logging
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from hybridnav.exceptions import IllegalTransitionError, LookupFailure
from hybridnav.graph import euclidean, heading_of, hop_matrix
from hybridnav.memory.models import (
    IMAGINATION_ID_START,
    LOCATION_CODE_DIM,
    STOP_ID,
    Completeness,
    EmbeddingInputs,
    FeatureLayout,
    MemoryNode,
    NodeKind,
)
from hybridnav.memory.pruning import criterion_values
from hybridnav.world.models import Observation


logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = 'hybridnav-memory-v1'


def _key(a: int, b: int) -> Tuple[int, int]:
    return (a, b) if a < b else (b, a)


class MemoryMap:
    """
    Hybrid topological memory map.

    Args:
        layout: FeatureLayout of node features.
        imagination_cap: Upper bound on Imagination nodes after pruning.
        tau: Duplicate threshold of the pruning criterion.
        position_scale: Position scale of the pruning criterion in meters.

    Example:
        >>> memory = MemoryMap(FeatureLayout(32, 16, 16), imagination_cap=4)
        >>> memory.integrate_observation(observe(world, 0), step=1)
        >>> memory.current_id
        0
    """

    def __init__(
        self,
        layout: FeatureLayout,
        imagination_cap: int = 4,
        tau: float = 0.9,
        position_scale: float = 1.0
    ):
        self.layout = layout
        self.imagination_cap = imagination_cap
        self.tau = tau
        self.position_scale = position_scale
        self.nodes: Dict[int, MemoryNode] = {}
        self._edges: Dict[Tuple[int, int], float] = {}
        self.current_id: Optional[int] = None
        self.visit_log: List[int] = []
        self._next_imagination_id = IMAGINATION_ID_START

    # -- queries ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self.nodes

    def node(self, node_id: int) -> MemoryNode:
        """
        Look up a node.

        Raises:
            LookupFailure: If the id is not in the map.
        """
        try:
            return self.nodes[node_id]
        except KeyError:
            raise LookupFailure(f"Node {node_id} is not in memory.", details={'node_id': node_id})

    def ids(self, *kinds: NodeKind) -> List[int]:
        """Sorted ids of the nodes of the given kinds (all nodes if none given)."""
        if not kinds:
            return sorted(self.nodes)
        return sorted(i for i, n in self.nodes.items() if n.kind in kinds)

    def count(self, kind: NodeKind) -> int:
        return sum(1 for n in self.nodes.values() if n.kind == kind)

    def kind_counts(self) -> Dict[str, int]:
        return {kind.value: self.count(kind) for kind in NodeKind}

    @property
    def current(self) -> Optional[MemoryNode]:
        return None if self.current_id is None else self.nodes[self.current_id]

    @property
    def edges(self) -> List[Tuple[int, int, float]]:
        """Stored (a, b, length) edges with a < b; stop edges are implicit."""
        return [(a, b, length) for (a, b), length in sorted(self._edges.items())]

    def has_edge(self, a: int, b: int) -> bool:
        if a == b or a not in self.nodes or b not in self.nodes:
            return False
        if a == STOP_ID or b == STOP_ID:
            return True
        return _key(a, b) in self._edges

    def neighbors(self, node_id: int) -> List[int]:
        """Sorted neighbors, the stop node included."""
        self.node(node_id)
        if node_id == STOP_ID:
            return [i for i in sorted(self.nodes) if i != STOP_ID]
        found = {b if a == node_id else a for a, b in self._edges if node_id in (a, b)}
        if STOP_ID in self.nodes:
            found.add(STOP_ID)
        return sorted(found)

    def real_adjacency(self) -> Dict[int, Dict[int, float]]:
        """Adjacency over stored edges between non-Imagination nodes."""
        adjacency: Dict[int, Dict[int, float]] = {}
        for (a, b), length in self._edges.items():
            if (self.nodes[a].kind == NodeKind.IMAGINATION
                    or self.nodes[b].kind == NodeKind.IMAGINATION):
                continue
            adjacency.setdefault(a, {})[b] = length
            adjacency.setdefault(b, {})[a] = length
        return adjacency

    def hop_matrix(self, order: Optional[List[int]] = None) -> np.ndarray:
        """Shortest-hop matrix over memory edges, the stop node one hop from all."""
        order = self.ids() if order is None else order
        return hop_matrix(order, self._edges.keys(), hub=STOP_ID)

    # -- observation integration ------------------------------------------

    def _ensure_stop(self) -> None:
        if STOP_ID not in self.nodes:
            self.nodes[STOP_ID] = MemoryNode(
                STOP_ID, NodeKind.STOP, np.zeros(self.layout.dim), None
            )

    def _set_edge(self, a: int, b: int) -> None:
        if a == b:
            return
        self._edges[_key(a, b)] = euclidean(self.nodes[a].position, self.nodes[b].position)

    def _refresh_edges(self, node_id: int) -> None:
        for a, b in list(self._edges):
            if node_id in (a, b):
                self._set_edge(a, b)

    def integrate_observation(self, obs: Observation, step: int) -> 'MemoryMap':
        """
        Fold an observation into the map.

        The occupied node becomes Current and the previous Current becomes
        Visited. Every neighbor stub becomes a Navigable node or, when
        already Navigable, has its feature average-pooled with the new stub.
        Visited features are never changed.

        Args:
            obs: Observation at the node the agent occupies.
            step: Step index, at least 1.

        Returns:
            The map itself.

        Raises:
            IllegalTransitionError: If step < 1 or the observed node is not
                adjacent to the previous Current node.
        """
        if step < 1:
            raise IllegalTransitionError(
                f"Observation steps start at 1 (got {step}).", details={'step': step}
            )
        node_id = obs.node_id
        previous = self.current_id
        if previous is not None and node_id != previous and _key(previous, node_id) not in self._edges:
            raise IllegalTransitionError(
                f"Node {node_id} is not adjacent to the current node {previous}.",
                details={'node_id': node_id, 'current_id': previous}
            )

        if previous is not None:
            self.nodes[previous].kind = NodeKind.VISITED

        full = self.layout.join(obs.appearance, obs.geometry, obs.semantic)
        existing = self.nodes.get(node_id)
        if existing is None or existing.kind != NodeKind.VISITED:
            feature = full
        else:
            feature = existing.feature
        self.nodes[node_id] = MemoryNode(
            node_id, NodeKind.CURRENT, feature, np.array(obs.position, dtype=np.float64),
            last_visit_step=step,
        )
        if existing is not None:
            self._refresh_edges(node_id)
        self.current_id = node_id
        self.visit_log.append(node_id)

        for stub in obs.neighbor_stubs:
            stub_feature = self.layout.join(stub.appearance, stub.geometry, stub.semantic)
            known = self.nodes.get(stub.neighbor_id)
            if known is None:
                self.nodes[stub.neighbor_id] = MemoryNode(
                    stub.neighbor_id, NodeKind.NAVIGABLE, stub_feature,
                    np.array(stub.position, dtype=np.float64),
                )
            elif known.kind == NodeKind.NAVIGABLE:
                known.feature = (known.feature + stub_feature) / 2.0
                if not np.array_equal(known.position, stub.position):
                    known.position = np.array(stub.position, dtype=np.float64)
                    self._refresh_edges(stub.neighbor_id)
            self._set_edge(node_id, stub.neighbor_id)

        self._ensure_stop()
        logger.debug("Integrated node %s at step %d: %s", node_id, step, self.kind_counts())
        return self

    # -- imagination -----------------------------------------------------

    def add_imagination_node(
        self,
        feature: np.ndarray,
        position: np.ndarray,
        parent_id: Optional[int] = None,
        depth: int = 1
    ) -> int:
        """
        Add an Imagination node, connected to its parent when given.

        Returns:
            The allocated node id.
        """
        node_id = self._next_imagination_id
        self._next_imagination_id += 1
        self.nodes[node_id] = MemoryNode(
            node_id, NodeKind.IMAGINATION, np.asarray(feature, dtype=np.float64).copy(),
            np.asarray(position, dtype=np.float64).copy(), depth=depth,
        )
        if parent_id is not None and parent_id in self.nodes and parent_id != STOP_ID:
            self._set_edge(node_id, parent_id)
        self._ensure_stop()
        return node_id

    def _remove(self, node_id: int, into: Optional[int] = None) -> None:
        """
        Delete a node. With ``into``, its edges to Imagination nodes are
        re-attached there; edges between real nodes only come from
        observations.
        """
        for a, b in list(self._edges):
            if node_id in (a, b):
                del self._edges[(a, b)]
                other = b if a == node_id else a
                if (into is not None and other != into
                        and self.nodes[other].kind == NodeKind.IMAGINATION):
                    self._set_edge(into, other)
        del self.nodes[node_id]

    def _merge(self, i: int, j: int) -> None:
        """Merge Imagination node i with node j."""
        a, b = self.nodes[i], self.nodes[j]
        if b.kind in (NodeKind.VISITED, NodeKind.CURRENT):
            self._remove(i, into=j)
            return
        if b.kind == NodeKind.IMAGINATION:
            keep, drop = (i, j) if i < j else (j, i)
        else:
            keep, drop = j, i
        kept = self.nodes[keep]
        kept.feature = (a.feature + b.feature) / 2.0
        kept.position = (a.position + b.position) / 2.0
        kept.depth = min(a.depth, b.depth) if b.kind == NodeKind.IMAGINATION else 0
        self._remove(drop, into=keep)
        self._refresh_edges(keep)

    def _best_pair(self, tau: float) -> Optional[Tuple[int, int]]:
        imagination = self.ids(NodeKind.IMAGINATION)
        others = [k for k in self.ids() if k != STOP_ID]
        if not imagination or len(others) < 2:
            return None
        features = np.stack([self.nodes[k].feature for k in others])
        positions = np.stack([self.nodes[k].position for k in others])
        best = None
        for i in imagination:
            node = self.nodes[i]
            values = criterion_values(node.feature, node.position, features, positions,
                                      self.position_scale)
            for k, j in enumerate(others):
                if j == i or values[k] <= tau:
                    continue
                pair = (min(i, j), max(i, j))
                if best is None or values[k] > best[0] or (values[k] == best[0] and pair < best[1]):
                    best = (values[k], pair, i, j)
        return None if best is None else (best[2], best[3])

    def prune_imagination(self, tau: Optional[float] = None) -> 'MemoryMap':
        """
        Merge duplicate Imagination nodes, then enforce the cap.

        While some Imagination node and another non-stop node score above
        ``tau``, the highest-scoring pair (ties by lowest ids) is merged:
        features are averaged and the position becomes the midpoint. The
        result stays Imagination only when both were; merging with a
        Navigable node yields a Navigable node and merging with a Visited
        or Current node absorbs the Imagination node.

        When more than ``imagination_cap`` Imagination nodes remain, the
        ones with the highest criterion against the Current node are kept
        (ties by lowest id).

        Args:
            tau: Threshold; defaults to the map's tau.

        Returns:
            The map itself.
        """
        tau = self.tau if tau is None else tau
        merges = 0
        while True:
            pair = self._best_pair(tau)
            if pair is None:
                break
            self._merge(*pair)
            merges += 1

        imagination = self.ids(NodeKind.IMAGINATION)
        dropped = 0
        if len(imagination) > self.imagination_cap:
            current = self.current
            if current is None:
                relevance = np.zeros(len(imagination))
            else:
                relevance = criterion_values(
                    current.feature, current.position,
                    np.stack([self.nodes[i].feature for i in imagination]),
                    np.stack([self.nodes[i].position for i in imagination]),
                    self.position_scale,
                )
            ranked = sorted(zip(imagination, relevance), key=lambda item: (-item[1], item[0]))
            for node_id, _ in ranked[self.imagination_cap:]:
                self._remove(node_id)
                dropped += 1

        if merges or dropped:
            logger.debug("Pruned imagination: %d merges, %d dropped", merges, dropped)
        return self

    # -- embedding inputs ------------------------------------------------

    def embedding_inputs(self, node_id: int, current_step: int) -> EmbeddingInputs:
        """
        Feature, location code and step code of a node.

        The location code is (dx, dy, dz, distance, heading) relative to the
        Current node; it is all zeros for the Current and stop nodes.

        Raises:
            LookupFailure: If the node is not in the map.
        """
        node = self.node(node_id)
        code = np.zeros(LOCATION_CODE_DIM)
        current = self.current
        if node.position is not None and current is not None and node_id != self.current_id:
            delta = node.position - current.position
            code[:3] = delta
            code[3] = float(np.linalg.norm(delta))
            code[4] = heading_of(float(delta[0]), float(delta[1]))
        if node.kind == NodeKind.CURRENT:
            step_code = current_step
        elif node.kind == NodeKind.VISITED:
            step_code = node.last_visit_step
        else:
            step_code = 0
        return EmbeddingInputs(node_id, node.kind, node.feature, code, step_code)

    # -- snapshots -------------------------------------------------------

    def copy(self) -> 'MemoryMap':
        clone = MemoryMap(self.layout, self.imagination_cap, self.tau, self.position_scale)
        clone.nodes = {i: n.copy() for i, n in self.nodes.items()}
        clone._edges = dict(self._edges)
        clone.current_id = self.current_id
        clone.visit_log = list(self.visit_log)
        clone._next_imagination_id = self._next_imagination_id
        return clone

    def snapshot(self) -> Dict:
        """JSON-compatible dump mirroring the world file format."""
        nodes = []
        for node_id in self.ids():
            node = self.nodes[node_id]
            appearance, geometry, semantic = self.layout.split(node.feature)
            nodes.append({
                'id': node_id,
                'position': None if node.position is None else node.position.tolist(),
                'appearance': appearance.tolist(),
                'geometry': geometry.tolist(),
                'semantic': semantic.tolist(),
                'kind': node.kind.value,
                'last_visit_step': node.last_visit_step,
                'completeness': node.completeness.value,
            })
        return {
            'format': SNAPSHOT_FORMAT,
            'current_id': self.current_id,
            'imagination_cap': self.imagination_cap,
            'nodes': nodes,
            'edges': [[a, b, length] for a, b, length in self.edges],
        }

    def check_invariants(self) -> List[str]:
        """Violated structural invariants, as messages (empty when valid)."""
        problems = []
        if self.nodes:
            if self.count(NodeKind.CURRENT) != 1:
                problems.append(f"{self.count(NodeKind.CURRENT)} Current nodes")
            if self.count(NodeKind.STOP) != 1:
                problems.append(f"{self.count(NodeKind.STOP)} Stop nodes")
        if self.count(NodeKind.IMAGINATION) > self.imagination_cap:
            problems.append("imagination cap exceeded")
        for (a, b), length in self._edges.items():
            expected = euclidean(self.nodes[a].position, self.nodes[b].position)
            if abs(length - expected) > 1e-9:
                problems.append(f"edge ({a}, {b}) length {length} != {expected}")
        for node in self.nodes.values():
            if node.kind in (NodeKind.VISITED, NodeKind.CURRENT):
                if node.completeness != Completeness.FULL or node.last_visit_step < 1:
                    problems.append(f"node {node.id} visited without full view")
            if node.kind == NodeKind.IMAGINATION and node.last_visit_step != 0:
                problems.append(f"imagination node {node.id} has a visit step")
        return problems


def integrate_observation(memory: MemoryMap, obs: Observation, step: int) -> MemoryMap:
    """Functional alias of MemoryMap.integrate_observation."""
    return memory.integrate_observation(obs, step)


def prune_imagination(memory: MemoryMap, tau: Optional[float] = None) -> MemoryMap:
    """Functional alias of MemoryMap.prune_imagination."""
    return memory.prune_imagination(tau)


def embedding_inputs(memory: MemoryMap, node_id: int, current_step: int) -> EmbeddingInputs:
    """Functional alias of MemoryMap.embedding_inputs."""
    return memory.embedding_inputs(node_id, current_step)
