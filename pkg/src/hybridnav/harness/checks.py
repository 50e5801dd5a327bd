"""
Self-Check Module

Numerical checks run from the command line: the policy's analytic
gradients against finite differences, and the waypoint heatmap
round trip through non-maximum suppression.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import torch

from hybridnav.config import AgentConfig, PolicyConfig, WorldConfig
from hybridnav.exceptions import NumericalError
from hybridnav.imagination import (
    ANGULAR_BINS,
    RADIAL_BINS,
    OracleImaginer,
    bin_center,
    heatmap_gt,
    imagine,
    nms_peaks,
    polar_bin,
)
from hybridnav.memory import NodeKind
from hybridnav.policy import NavigationPolicy, decide, encode_instruction, grad_check, sap_loss
from hybridnav.harness.runner import new_memory
from hybridnav.world import Vocabulary, generate_world, observe


logger = logging.getLogger(__name__)

GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_ENTRIES = 4
GRADCHECK_IMAGINER_NOISE = 0.1


@dataclass
class GradCheckResult:
    """
    Outcome of the policy gradient check.

    Attributes:
        max_error: Largest per-tensor error.
        tolerance: Largest accepted error.
        per_tensor: Error of every parameter tensor.
        gradient_norms: Norm of every tensor's analytic gradient.
        kind_counts: Node kinds of the memory the loss was built on.
        policy: Configuration of the checked policy.
    """
    max_error: float
    tolerance: float
    per_tensor: Dict[str, float] = field(default_factory=dict)
    gradient_norms: Dict[str, float] = field(default_factory=dict)
    kind_counts: Dict[str, int] = field(default_factory=dict)
    policy: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def reached(self, prefix: str) -> bool:
        """True when some tensor under ``prefix`` has a non-zero gradient."""
        return any(norm > 0.0 for name, norm in self.gradient_norms.items()
                   if name.startswith(prefix))

    def to_dict(self):
        return {'max_error': self.max_error, 'tolerance': self.tolerance,
                'passed': self.passed, 'per_tensor': dict(self.per_tensor),
                'gradient_norms': dict(self.gradient_norms),
                'kind_counts': dict(self.kind_counts), 'policy': dict(self.policy)}


def gradcheck_memory(world, seed: int = 0):
    """
    Memory of the gradient check: the start node's observation plus a
    depth-1 noisy oracle imagination.

    The criterion never exceeds 1, so a threshold of 1.0 keeps every
    Imagination node next to the Navigable node it was imagined at.
    """
    agent = AgentConfig(max_depth=1, imagination_cap=4, tau=1.0)
    memory = new_memory(world, agent)
    rng = np.random.default_rng(seed)
    memory.integrate_observation(observe(world, world.nodes[0].id, agent.observation_noise, rng), 1)
    imagine(memory, OracleImaginer(world, GRADCHECK_IMAGINER_NOISE, seed),
            agent.history_length, agent.max_depth, step=1)
    if memory.count(NodeKind.IMAGINATION) == 0:
        raise NumericalError(
            "Gradient check memory has no Imagination nodes.",
            details={'kind_counts': memory.kind_counts(), 'seed': seed}
        )
    return memory


def policy_gradcheck(
    seed: int = 0,
    nodes: int = 5,
    max_entries: Optional[int] = GRADCHECK_ENTRIES,
    tolerance: float = GRADCHECK_TOLERANCE,
    epsilon: float = 1e-5,
    config: Optional[PolicyConfig] = None
) -> GradCheckResult:
    """
    Gradient check of the policy's SAP loss on a one-room world.

    The memory holds Navigable and Imagination nodes, so real scores,
    imagined scores and the fusion factor all reach the loss.

    Args:
        seed: Seed of the world, the policy and the sampled entries.
        nodes: Viewpoints in the single room.
        max_entries: Entries checked per tensor; all when None.
        tolerance: Largest accepted relative error.
        epsilon: Central-difference step.
        config: Policy configuration; the default policy when None.

    Example:
        >>> policy_gradcheck(seed=0, max_entries=4).passed
        True
    """
    world = generate_world(WorldConfig(rooms=1, nodes_per_room=nodes, seed=seed))
    memory = gradcheck_memory(world, seed)

    vocabulary = Vocabulary.for_world(world)
    base = PolicyConfig() if config is None else config
    checked = PolicyConfig(**{**base.to_dict(), 'seed': seed})
    policy = NavigationPolicy(checked, vocabulary, memory.layout.dim)
    tokens = ('walk', 'into', 'the', vocabulary.room_words[0], 'near', vocabulary.object_words[0])
    target = memory.ids(NodeKind.NAVIGABLE)[0]

    def loss_fn() -> torch.Tensor:
        instruction = encode_instruction(tokens, policy)
        scores = decide(memory, instruction, policy, 1)
        return sap_loss(scores.fused, target)

    policy.zero_grad()
    loss_fn().backward()
    norms = {name: float(p.grad.norm()) if p.grad is not None else 0.0
             for name, p in policy.named_parameters()}

    report: Dict[str, float] = {}
    error = grad_check(policy, loss_fn, epsilon, max_entries, seed, report=report)
    logger.info("Policy gradient check: max relative error %.3e over %d tensors",
                error, len(report))
    return GradCheckResult(error, tolerance, report, norms, memory.kind_counts(),
                           checked.to_dict())


def _circular_gap(a: int, b: int) -> int:
    gap = abs(a - b) % ANGULAR_BINS
    return min(gap, ANGULAR_BINS - gap)


def _separated_bins(rng: np.random.Generator, count: int,
                    separation: int) -> List[Tuple[int, int]]:
    bins: List[Tuple[int, int]] = []
    while len(bins) < count:
        candidate = (int(rng.integers(ANGULAR_BINS)), int(rng.integers(RADIAL_BINS)))
        if all(_circular_gap(candidate[0], a) >= separation and abs(candidate[1] - r) >= separation
               for a, r in bins):
            bins.append(candidate)
    return bins


@dataclass
class RoundTripResult:
    trials: int
    recovered: int
    failures: List[int] = field(default_factory=list)

    @property
    def rate(self) -> float:
        return self.recovered / self.trials if self.trials else 1.0

    def to_dict(self):
        return {'trials': self.trials, 'recovered': self.recovered, 'rate': self.rate,
                'failures': list(self.failures)}


def waypoint_roundtrip(
    trials: int = 1000,
    seed: int = 0,
    max_k: int = 4,
    window: Tuple[int, int] = (5, 3),
    separation: int = 2
) -> RoundTripResult:
    """
    Recover random neighbor sets from their ground-truth heatmaps.

    Each trial draws 1..max_k neighbors at bin centers, pairwise at least
    ``separation`` bins apart on both axes, and counts as recovered when
    every neighbor has a peak within one bin on each axis.

    Example:
        >>> waypoint_roundtrip(trials=50, seed=3).rate
        1.0
    """
    rng = np.random.default_rng(seed)
    result = RoundTripResult(trials, 0)
    for trial in range(trials):
        count = int(rng.integers(1, max_k + 1))
        bins = _separated_bins(rng, count, separation)
        heatmap = heatmap_gt([bin_center(a, r) for a, r in bins])
        peaks = [polar_bin(h, d) for h, d in nms_peaks(heatmap, max_k, window)]
        found = all(
            any(_circular_gap(a, pa) <= 1 and abs(r - pr) <= 1 for pa, pr in peaks)
            for a, r in bins
        )
        if found:
            result.recovered += 1
        else:
            result.failures.append(trial)
    logger.info("Waypoint round trip: %d/%d trials recovered", result.recovered, trials)
    return result
