"""
Decision Module

Operations of one decision step: instruction encoding, graph-aware
cross-modal encoding of the memory map, node scoring, the fusion factor,
score fusion, action selection and the single-step action prediction loss.

Scores are dictionaries keyed by memory node id whose values are floats or
0-dim tensors, so the same functions serve inference and training.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from scipy.special import softmax

from hybridnav.exceptions import (
    FusionError,
    NoPathError,
    RoutingError,
    ShapeError,
    SupervisionError,
)
from hybridnav.graph import euclidean, lexicographic_shortest_path
from hybridnav.memory.map import MemoryMap
from hybridnav.memory.models import STOP_ID, NodeKind
from hybridnav.policy.network import FUSION_LOGIT_LIMIT, NavigationPolicy, NodeEncodings
from hybridnav.world.models import Instruction


logger = logging.getLogger(__name__)

Score = Union[float, torch.Tensor]
ScoreMap = Dict[int, Score]


@dataclass
class ScoreSet:
    """
    Scores of one decision step.

    Attributes:
        s_r: Navigable and stop node scores.
        s_i: Imagination node scores.
        gamma: Fusion factor in (0, 1).
        fused: Fused scores over Navigable nodes and the stop node.
    """
    s_r: ScoreMap
    s_i: ScoreMap
    gamma: Score
    fused: ScoreMap = field(default_factory=dict)

    def as_floats(self) -> Dict[str, Dict[str, float]]:
        """JSON-friendly copy for step logs."""
        def plain(scores):
            return {str(k): float(v) for k, v in sorted(scores.items())}
        return {'s_r': plain(self.s_r), 's_i': plain(self.s_i), 'fused': plain(self.fused)}


@dataclass(frozen=True)
class Action:
    """Stop (target None) or GoTo(target) along a route of memory node ids."""
    target: Optional[int]
    route: Tuple[int, ...] = ()

    @property
    def is_stop(self) -> bool:
        return self.target is None

    @classmethod
    def stop(cls) -> 'Action':
        return cls(None, ())

    def to_dict(self) -> Dict:
        if self.is_stop:
            return {'type': 'stop'}
        return {'type': 'goto', 'target': self.target, 'route': list(self.route)}


def encode_instruction(tokens: Union[Sequence[str], Instruction], policy: NavigationPolicy) -> torch.Tensor:
    """
    Encode instruction tokens into contextual vectors (T, d_model).

    Token, position and type (room, object, direction, function) embeddings
    are summed and passed through the instruction self-attention layers.

    Raises:
        EncodingError: On an empty instruction or an unknown token.
    """
    if isinstance(tokens, Instruction):
        tokens = tokens.tokens
    return policy.encode_tokens(list(tokens))


def gasa_attention(
    node_embs: torch.Tensor,
    pairwise_hops,
    policy: NavigationPolicy,
    layer: int
) -> torch.Tensor:
    """
    Apply one graph-aware self-attention layer of the policy.

    Args:
        node_embs: (n, d_model) node vectors.
        pairwise_hops: (n, n) hop counts, -1 for disconnected pairs.
        policy: NavigationPolicy holding the layer.
        layer: Layer index.

    Raises:
        ShapeError: If the widths or the hop matrix do not match.
    """
    if node_embs.dim() != 2 or node_embs.shape[1] != policy.config.d_model:
        raise ShapeError(
            f"Node embeddings must be (n, {policy.config.d_model}).",
            details={'shape': list(node_embs.shape)}
        )
    return policy.graph_layers[layer](node_embs, torch.as_tensor(pairwise_hops))


def cross_modal_encode(
    memory: MemoryMap,
    instruction_enc: torch.Tensor,
    policy: NavigationPolicy,
    current_step: int
) -> Tuple[NodeEncodings, NodeEncodings]:
    """
    Contextual vectors of every memory node, split into real and imagined.

    Node embedding inputs are projected to d_model and refined by
    alternating graph-aware self-attention over the memory graph (stop node
    one hop from all) and cross-attention to the instruction.

    Args:
        memory: Memory map with a Current node.
        instruction_enc: Output of encode_instruction.
        policy: NavigationPolicy.
        current_step: Step index used for the Current node's step code.

    Returns:
        (real encodings for Visited/Current/Navigable/Stop nodes,
         imagined encodings for Imagination nodes), rows in id order.

    Raises:
        EncodingError: If the instruction encoding is empty.
    """
    order = memory.ids()
    inputs = [memory.embedding_inputs(node_id, current_step) for node_id in order]
    hops = torch.as_tensor(memory.hop_matrix(order))
    vectors = policy.graph_encode(policy.embed_nodes(inputs), hops, instruction_enc)
    encodings = NodeEncodings(order, [item.kind for item in inputs], vectors)

    real_rows = [r for r, kind in enumerate(encodings.kinds) if kind != NodeKind.IMAGINATION]
    imagined_rows = [r for r, kind in enumerate(encodings.kinds) if kind == NodeKind.IMAGINATION]
    return encodings.select(real_rows), encodings.select(imagined_rows)


def score_nodes(
    real: NodeEncodings,
    imagined: NodeEncodings,
    policy: NavigationPolicy
) -> Tuple[ScoreMap, ScoreMap]:
    """
    Score nodes with the two-layer heads.

    Returns:
        (s_r over Navigable and stop nodes, s_i over Imagination nodes).
    """
    s_r: ScoreMap = {}
    rows = [r for r, kind in enumerate(real.kinds) if kind in (NodeKind.NAVIGABLE, NodeKind.STOP)]
    if rows:
        candidates = real.select(rows)
        values = policy.score(candidates.vectors)
        s_r = {node_id: values[k] for k, node_id in enumerate(candidates.ids)}
    s_i: ScoreMap = {}
    if len(imagined):
        values = policy.score(imagined.vectors, imagined=True)
        s_i = {node_id: values[k] for k, node_id in enumerate(imagined.ids)}
    return s_r, s_i


def fusion_factor(real: NodeEncodings, imagined: NodeEncodings, policy: NavigationPolicy) -> torch.Tensor:
    """
    Fusion factor gamma = sigmoid(FFN([mean(real), mean(imagined)])).

    The imagined pool is the zero vector when there are no Imagination
    nodes. The pre-sigmoid value is clamped to +-30 so gamma stays strictly
    inside (0, 1) in float64.

    Raises:
        ShapeError: If there are no real node vectors.
    """
    if len(real) == 0:
        raise ShapeError("Fusion factor needs at least one real node.", details={'real': 0})
    logit = policy.fusion_logit(real.vectors, imagined.vectors)
    return torch.sigmoid(logit.clamp(-FUSION_LOGIT_LIMIT, FUSION_LOGIT_LIMIT))


def assign_imagination(memory: MemoryMap) -> Dict[int, List[int]]:
    """
    Map every Navigable node to the Imagination nodes nearest to it.

    Ties between equidistant Navigable nodes go to the lowest id.

    Raises:
        FusionError: If Imagination nodes exist but no Navigable node does.
    """
    navigable = memory.ids(NodeKind.NAVIGABLE)
    imagination = memory.ids(NodeKind.IMAGINATION)
    assigned: Dict[int, List[int]] = {n: [] for n in navigable}
    if imagination and not navigable:
        raise FusionError(
            "Imagination nodes cannot be fused without a Navigable node.",
            details={'imagination': imagination}
        )
    for i in imagination:
        position = memory.nodes[i].position
        best, best_distance = None, None
        for n in navigable:
            distance = euclidean(position, memory.nodes[n].position)
            if best is None or distance < best_distance:
                best, best_distance = n, distance
        assigned[best].append(i)
    return assigned


def fuse_scores(
    s_r: Mapping[int, Score],
    s_i: Mapping[int, Score],
    gamma: Score,
    memory: MemoryMap,
    memory_type: str = 'hybrid'
) -> ScoreMap:
    """
    Fold imagined scores into the scores of their nearest Navigable nodes.

    hybrid: fused(n) = s_r(n) + gamma * sum of s_i over the Imagination
    nodes assigned to n. imagination: fused(n) = that sum alone. reality:
    fused = s_r. The stop score always passes through unchanged.

    Args:
        s_r: Scores of Navigable and stop nodes.
        s_i: Scores of Imagination nodes (must match the map's Imagination
            nodes exactly).
        gamma: Fusion factor.
        memory: Memory map the scores belong to.
        memory_type: 'hybrid', 'imagination' or 'reality'.

    Returns:
        Fused scores over Navigable nodes and the stop node.

    Raises:
        FusionError: If the score keys do not match the map, or Imagination
            scores exist without Navigable nodes.

    Example:
        >>> fuse_scores({1: 1.0, STOP_ID: 0.0}, {1_000_000: 2.0}, 0.5, memory)[1]
        2.0
    """
    expected = set(memory.ids(NodeKind.NAVIGABLE, NodeKind.STOP))
    if set(s_r) != expected:
        raise FusionError(
            "Real scores must cover exactly the Navigable and stop nodes.",
            details={'missing': sorted(expected - set(s_r)), 'extra': sorted(set(s_r) - expected)}
        )
    if memory_type == 'reality':
        return dict(s_r)
    if set(s_i) != set(memory.ids(NodeKind.IMAGINATION)):
        raise FusionError(
            "Imagined scores must cover exactly the Imagination nodes.",
            details={'scored': sorted(s_i), 'imagination': memory.ids(NodeKind.IMAGINATION)}
        )
    if not s_i and memory_type == 'hybrid':
        return dict(s_r)

    assigned = assign_imagination(memory)
    fused: ScoreMap = {}
    for node_id in sorted(s_r):
        if node_id == STOP_ID:
            fused[node_id] = s_r[node_id]
            continue
        members = assigned.get(node_id, [])
        if memory_type == 'imagination':
            total: Score = 0.0
            for i in members:
                total = total + s_i[i]
            fused[node_id] = total
        elif members:
            total = s_i[members[0]]
            for i in members[1:]:
                total = total + s_i[i]
            fused[node_id] = s_r[node_id] + gamma * total
        else:
            fused[node_id] = s_r[node_id]
    return fused


def _plain(scores: Mapping[int, Score]) -> Tuple[List[int], np.ndarray]:
    ids = sorted(scores)
    return ids, np.array([float(scores[i]) for i in ids], dtype=np.float64)


def action_probabilities(fused: Mapping[int, Score], temperature: float = 1.0) -> Dict[int, float]:
    """Softmax of fused scores at a temperature, keyed by node id."""
    ids, values = _plain(fused)
    return dict(zip(ids, softmax(values / temperature)))


def select_action(
    fused: Mapping[int, Score],
    memory: MemoryMap,
    mode: str = 'greedy',
    rng: Optional[np.random.Generator] = None,
    temperature: float = 1.0
) -> Action:
    """
    Choose Stop or a Navigable target and route to it.

    Greedy takes the argmax (ties to the lowest id); 'sample' draws from
    the softmax at ``temperature``. GoTo routes follow memory edges from
    the Current node, never through Imagination nodes.

    Raises:
        RoutingError: On an empty score set, an illegal target kind or an
            unreachable target.
    """
    if not fused:
        raise RoutingError("No candidate to select from.", details={})
    ids, values = _plain(fused)
    if mode == 'sample':
        rng = rng if rng is not None else np.random.default_rng(0)
        target = ids[int(rng.choice(len(ids), p=softmax(values / temperature)))]
    else:
        target = ids[int(np.argmax(values))]

    if target == STOP_ID:
        return Action.stop()
    kind = memory.node(target).kind
    if kind != NodeKind.NAVIGABLE:
        raise RoutingError(
            f"Node {target} of kind {kind.value} is not a legal action target.",
            details={'target': target, 'kind': kind.value}
        )
    try:
        route, _ = lexicographic_shortest_path(memory.real_adjacency(), memory.current_id, target)
    except NoPathError:
        raise RoutingError(
            f"Node {target} is unreachable through known edges.",
            details={'target': target, 'current_id': memory.current_id}
        )
    return Action(target, tuple(route))


def sap_loss(fused: Mapping[int, Score], expert_target: int) -> torch.Tensor:
    """
    Cross-entropy of softmax(fused) against the expert's next node.

    Raises:
        SupervisionError: If the expert target is not a candidate.
    """
    if expert_target not in fused:
        raise SupervisionError(
            f"Expert target {expert_target} is not among the candidates.",
            details={'expert_target': expert_target, 'candidates': sorted(fused)}
        )
    ids = sorted(fused)
    values = torch.stack([torch.as_tensor(fused[i], dtype=torch.float64) for i in ids])
    return torch.logsumexp(values, dim=0) - values[ids.index(expert_target)]


def decide(
    memory: MemoryMap,
    instruction_enc: torch.Tensor,
    policy: NavigationPolicy,
    current_step: int,
    gamma_mode: str = 'dynamic',
    gamma_value: float = 0.5,
    memory_type: str = 'hybrid'
) -> ScoreSet:
    """
    Run the scoring half of a decision step: encode, score and fuse.

    With memory_type 'hybrid' and Imagination nodes but no Navigable node,
    imagined scores are dropped rather than fused.
    """
    real, imagined = cross_modal_encode(memory, instruction_enc, policy, current_step)
    s_r, s_i = score_nodes(real, imagined, policy)
    if gamma_mode == 'fixed':
        gamma: Score = torch.tensor(gamma_value, dtype=torch.float64)
    else:
        gamma = fusion_factor(real, imagined, policy)
    if s_i and not memory.ids(NodeKind.NAVIGABLE):
        logger.debug("Dropping %d imagined scores: no navigable node", len(s_i))
        s_i = {}
        fused = dict(s_r)
    elif memory_type == 'reality':
        fused = dict(s_r)
    else:
        fused = fuse_scores(s_r, s_i, gamma, memory, memory_type)
    return ScoreSet(s_r, s_i, gamma, fused)
