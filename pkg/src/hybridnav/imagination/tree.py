"""
Imagination Tree Module

Grows imagined places outward from the frontier of the memory map and
commits them to memory as Imagination nodes.

Each expansion visits every frontier position in order: the imaginer
produces the structured channels, the room weights refine the semantic,
the imaginer produces the appearance and the waypoint predictor proposes
the next frontier. Generated channels are heading independent, so they
are canonical by construction.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Optional

import numpy as np

from hybridnav.exceptions import ExpansionExhaustedError
from hybridnav.imagination.imaginers import HistoryEntry, Imaginer
from hybridnav.imagination.room import RoomWeightDict, room_reweight
from hybridnav.imagination.waypoint import WaypointPredictor
from hybridnav.memory.map import MemoryMap
from hybridnav.memory.models import NodeKind


logger = logging.getLogger(__name__)


@dataclass
class Branch:
    """History and appearance carried along one path of the tree."""
    history: Deque[HistoryEntry]
    appearance: np.ndarray


@dataclass(frozen=True)
class FrontierEntry:
    """
    A position waiting to be imagined.

    Exactly one of ``parent_memory_id`` (a Navigable node) and
    ``parent_index`` (a generated node) is set.
    """
    position: np.ndarray
    branch: int
    parent_memory_id: Optional[int] = None
    parent_index: Optional[int] = None


@dataclass(frozen=True)
class GeneratedNode:
    """An imagined place."""
    position: np.ndarray
    appearance: np.ndarray
    geometry: np.ndarray
    semantic: np.ndarray
    depth: int
    parent_memory_id: Optional[int] = None
    parent_index: Optional[int] = None


@dataclass
class ImaginationTree:
    """
    Imagination grown at one step.

    Attributes:
        step_origin: Step the tree was initialized at.
        depth: Number of expansions so far.
        max_depth: Depth bound M.
        history_length: History length K.
        branches: Branch states referenced by the frontier.
        frontier: Positions of the next expansion.
        generated_nodes: Everything imagined so far, in generation order.
    """
    step_origin: int
    depth: int
    max_depth: int
    history_length: int
    branches: List[Branch] = field(default_factory=list)
    frontier: List[FrontierEntry] = field(default_factory=list)
    generated_nodes: List[GeneratedNode] = field(default_factory=list)

    @property
    def exhausted(self) -> bool:
        return self.depth >= self.max_depth

    @property
    def inert(self) -> bool:
        return not self.frontier


def init_tree(memory: MemoryMap, history_length: int, max_depth: int = 2,
              step: int = 0) -> ImaginationTree:
    """
    Seed a tree from the memory map.

    The history holds the last ``history_length`` visits in visit order,
    the appearance is the Current node's and the frontier lists the
    Navigable nodes by id.

    Example:
        >>> tree = init_tree(memory, history_length=2)
        >>> len(tree.frontier) == memory.count(NodeKind.NAVIGABLE)
        True
    """
    current = memory.current
    history: Deque[HistoryEntry] = deque(maxlen=history_length)
    for node_id in memory.visit_log[-history_length:] if history_length else []:
        node = memory.node(node_id)
        _, geometry, semantic = memory.layout.split(node.feature)
        history.append(HistoryEntry(geometry.copy(), semantic.copy(), node.position.copy()))

    tree = ImaginationTree(step_origin=step, depth=0, max_depth=max_depth,
                           history_length=history_length)
    if current is None:
        return tree
    appearance, _, _ = memory.layout.split(current.feature)
    tree.branches.append(Branch(history, appearance.copy()))
    for node_id in memory.ids(NodeKind.NAVIGABLE):
        tree.frontier.append(FrontierEntry(memory.node(node_id).position.copy(), 0,
                                           parent_memory_id=node_id))
    return tree


def expand_tree(
    tree: ImaginationTree,
    imaginer: Imaginer,
    waypoints: Optional[WaypointPredictor] = None,
    room_weights: Optional[RoomWeightDict] = None
) -> ImaginationTree:
    """
    Imagine every frontier position once and advance the depth.

    Args:
        tree: Tree to grow, modified in place.
        imaginer: Channel generator.
        waypoints: Waypoint predictor; without one the frontier ends here.
        room_weights: Room weights; without them semantics are not refined.

    Returns:
        The same tree.

    Raises:
        ExpansionExhaustedError: If the tree is already at its depth bound.
    """
    if tree.exhausted:
        raise ExpansionExhaustedError(
            f"Imagination tree already has depth {tree.depth} (bound {tree.max_depth}).",
            details={'depth': tree.depth, 'max_depth': tree.max_depth}
        )
    depth = tree.depth + 1
    grow = waypoints is not None and depth < tree.max_depth
    frontier: List[FrontierEntry] = []

    if imaginer.generates:
        for entry in tree.frontier:
            branch = tree.branches[entry.branch]
            geometry, semantic = imaginer.imagine_structure(tuple(branch.history), entry.position)
            if room_weights is not None:
                room = imaginer.room_of(entry.position, geometry, semantic)
                if room is not None:
                    semantic = room_reweight(semantic, room, room_weights)
            appearance = imaginer.imagine_appearance(branch.appearance, geometry, semantic,
                                                     entry.position)
            index = len(tree.generated_nodes)
            tree.generated_nodes.append(GeneratedNode(
                entry.position, appearance, geometry, semantic, depth,
                entry.parent_memory_id, entry.parent_index,
            ))

            if grow:
                history = deque(branch.history, maxlen=tree.history_length)
                history.append(HistoryEntry(geometry, semantic, entry.position))
                tree.branches.append(Branch(history, appearance))
                child = len(tree.branches) - 1
                for position in waypoints.predict(entry.position, appearance, geometry):
                    frontier.append(FrontierEntry(position, child, parent_index=index))

    tree.frontier = frontier
    tree.depth = depth
    logger.debug("Imagination depth %d: %d generated, %d on the frontier",
                 depth, len(tree.generated_nodes), len(frontier))
    return tree


def merge_into_memory(memory: MemoryMap, tree: ImaginationTree) -> MemoryMap:
    """
    Commit generated nodes to memory as Imagination nodes.

    Each node is connected to its parent (a Navigable or an earlier
    generated node), then duplicates are merged and the cap restored.
    """
    if not tree.generated_nodes:
        return memory
    ids: List[int] = []
    for node in tree.generated_nodes:
        parent = node.parent_memory_id if node.parent_index is None else ids[node.parent_index]
        feature = memory.layout.join(node.appearance, node.geometry, node.semantic)
        ids.append(memory.add_imagination_node(feature, node.position, parent, node.depth))
    return memory.prune_imagination()


def imagine(
    memory: MemoryMap,
    imaginer: Imaginer,
    history_length: int,
    max_depth: int,
    step: int = 0,
    waypoints: Optional[WaypointPredictor] = None,
    room_weights: Optional[RoomWeightDict] = None
) -> ImaginationTree:
    """Initialize, fully expand and merge one step's imagination."""
    tree = init_tree(memory, history_length, max_depth, step)
    while not tree.exhausted and not tree.inert:
        expand_tree(tree, imaginer, waypoints, room_weights)
    merge_into_memory(memory, tree)
    return tree
