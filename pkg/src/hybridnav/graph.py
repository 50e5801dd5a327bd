"""
Graph and Geometry Utilities

Shared helpers for the world graph and the memory map: the heading
convention, Euclidean lengths, a Dijkstra variant with deterministic
tie-breaking and hop-count matrices for graph-aware attention.

Heading convention: ``atan2`` over the (x, y) plane, 0 along +y,
increasing clockwise (+x is pi/2), reported in radians in [0, 2*pi).
"""

import heapq
import math
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from hybridnav.exceptions import NoPathError


TWO_PI = 2.0 * math.pi


def heading_of(dx: float, dy: float) -> float:
    """
    Heading of a planar displacement.

    Args:
        dx: Displacement along +x (east) in meters.
        dy: Displacement along +y (north) in meters.

    Returns:
        Heading in radians in [0, 2*pi); 0 for a zero displacement.

    Example:
        >>> round(heading_of(2.0, 0.0), 6)
        1.570796
    """
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return math.atan2(dx, dy) % TWO_PI


def offset_from_heading(heading: float, distance: float) -> Tuple[float, float]:
    """Inverse of heading_of: planar (dx, dy) for a heading and distance."""
    return distance * math.sin(heading), distance * math.cos(heading)


def euclidean(a: Sequence[float], b: Sequence[float]) -> float:
    """Euclidean distance between two 3-vectors."""
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def lexicographic_shortest_path(
    adjacency: Mapping[int, Mapping[int, float]],
    source: int,
    target: int
) -> Tuple[List[int], float]:
    """
    Shortest path with ties broken by the smallest node-id sequence.

    Dijkstra whose heap is ordered by (length, path). With strictly positive
    edge lengths the first time a node is popped its path is the minimal
    length one and, among those, the lexicographically smallest.

    Args:
        adjacency: node -> {neighbor: edge length}.
        source: Start node.
        target: End node.

    Returns:
        (path as node list, total length in meters).

    Raises:
        NoPathError: If target is unreachable from source.
    """
    if source == target:
        return [source], 0.0

    heap: List[Tuple[float, Tuple[int, ...]]] = [(0.0, (source,))]
    settled = set()
    while heap:
        length, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == target:
            return list(path), length
        for neighbor, edge_length in adjacency.get(node, {}).items():
            if neighbor not in settled:
                heapq.heappush(heap, (length + edge_length, path + (neighbor,)))

    raise NoPathError(
        f"No path between nodes {source} and {target}.",
        details={'source': source, 'target': target}
    )


def hop_matrix(
    node_order: Sequence[Hashable],
    edges: Iterable[Tuple[Hashable, Hashable]],
    hub: Optional[Hashable] = None
) -> np.ndarray:
    """
    Shortest-hop counts between every ordered pair of nodes.

    Args:
        node_order: Row/column order of the matrix.
        edges: Undirected edges.
        hub: Optional node treated as one hop from every other node
            without shortening paths between the others.

    Returns:
        Integer matrix; -1 marks disconnected pairs.
    """
    graph = nx.Graph()
    graph.add_nodes_from(n for n in node_order if n != hub)
    graph.add_edges_from((a, b) for a, b in edges if a != hub and b != hub)

    index = {node: i for i, node in enumerate(node_order)}
    hops = np.full((len(node_order), len(node_order)), -1, dtype=np.int64)
    for source, lengths in nx.all_pairs_shortest_path_length(graph):
        for target, count in lengths.items():
            hops[index[source], index[target]] = count

    if hub is not None and hub in index:
        h = index[hub]
        hops[h, :] = 1
        hops[:, h] = 1
        hops[h, h] = 0
    return hops


def adjacency_from_edges(
    edges: Iterable[Tuple[int, int, float]],
    allowed: Optional[set] = None
) -> Dict[int, Dict[int, float]]:
    """Symmetric adjacency dictionary, optionally restricted to ``allowed`` nodes."""
    adjacency: Dict[int, Dict[int, float]] = {}
    for a, b, length in edges:
        if allowed is not None and (a not in allowed or b not in allowed):
            continue
        adjacency.setdefault(a, {})[b] = length
        adjacency.setdefault(b, {})[a] = length
    return adjacency
