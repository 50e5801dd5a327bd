"""
Training Module

Teacher-forced training of the navigation policy on expert shortest paths
and full-batch training of the lite auxiliary models: the waypoint heatmap
model, the room-type classifier and the learned imaginer. Every loop uses
plain stochastic gradient descent at a fixed learning rate and aborts with
the last good parameters when a loss stops being finite.
"""

import copy
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from hybridnav.config import AgentConfig, RunConfig
from hybridnav.exceptions import TrainingDivergenceError
from hybridnav.graph import euclidean, heading_of
from hybridnav.harness.agent import AgentBundle
from hybridnav.harness.benchmark import Episode, build_episodes
from hybridnav.harness.runner import new_memory
from hybridnav.harness.seeds import derive_seed
from hybridnav.imagination import (
    MAX_RANGE,
    HistoryEntry,
    LearnedImaginerModel,
    RoomTypeModel,
    WaypointModel,
    heatmap_gt,
    imagine,
    inpaint_lite_loss,
    room_loss,
    waypoint_loss,
)
from hybridnav.memory import STOP_ID, MemoryMap
from hybridnav.performance import ProgressTracker
from hybridnav.policy import NavigationPolicy, decide, encode_instruction, sap_loss
from hybridnav.world import WorldGraph, observe


logger = logging.getLogger(__name__)


@dataclass
class SAPSample:
    """One teacher-forced decision: memory before acting and the expert's choice."""
    memory: MemoryMap
    tokens: Tuple[str, ...]
    step: int
    expert_target: int


@dataclass
class WaypointSample:
    appearance: np.ndarray
    geometry: np.ndarray
    heatmap: np.ndarray


@dataclass
class RoomSample:
    semantic: np.ndarray
    geometry: np.ndarray
    room_type: int


@dataclass
class ImaginerSample:
    """A visited transition: history before the target and the target's channels."""
    history: Tuple[HistoryEntry, ...]
    position: np.ndarray
    parent_appearance: np.ndarray
    appearance: np.ndarray
    geometry: np.ndarray
    semantic: np.ndarray


def _diverged(name: str, epoch: int, loss: float, last_good: Dict) -> TrainingDivergenceError:
    return TrainingDivergenceError(
        f"{name} training diverged at epoch {epoch} (loss {loss}).",
        details={'model': name, 'epoch': epoch, 'loss': loss},
        last_good_state=last_good,
    )


class SGDStepper:
    """
    Optimizer updates of one model.

    Before every update the current parameters are copied, so a later
    non-finite loss reports the parameters from before the update that
    produced it.
    """

    def __init__(self, module: nn.Module, optimizer: torch.optim.Optimizer, name: str):
        self.module = module
        self.optimizer = optimizer
        self.name = name
        self.last_good = copy.deepcopy(module.state_dict())

    def step(self, loss: torch.Tensor, epoch: int) -> float:
        """
        Apply one update and return the loss value.

        Raises:
            TrainingDivergenceError: If the loss is not finite; no update
                is applied.
        """
        value = float(loss.detach())
        if not np.isfinite(value):
            raise _diverged(self.name, epoch, value, self.last_good)
        self.last_good = copy.deepcopy(self.module.state_dict())
        self.optimizer.zero_grad()
        loss.backward()
        self.optimizer.step()
        return value


# -- policy --------------------------------------------------------------

def build_sap_samples(
    world: WorldGraph,
    episodes: Sequence[Episode],
    config: AgentConfig,
    bundle: Optional[AgentBundle] = None
) -> List[SAPSample]:
    """
    Walk every expert path and record each decision.

    Imagination runs before each decision when the config enables it and
    a bundle supplies the auxiliary models. The expert target is the next
    path node, then Stop at the goal.
    """
    samples = []
    for episode in episodes:
        rng = np.random.default_rng(derive_seed(episode.seed, 1))
        memory = new_memory(world, config)
        components = None
        if bundle is not None and config.imagination_enabled:
            components = bundle.components(world, config, derive_seed(episode.seed, 2))
        path = episode.expert_path
        memory.integrate_observation(observe(world, path[0], config.observation_noise, rng), 1)
        for k, node_id in enumerate(path):
            step = k + 1
            if components is not None:
                imaginer, waypoints, weights = components
                imagine(memory, imaginer, config.history_length, config.max_depth, step,
                        waypoints, weights)
            target = path[k + 1] if k + 1 < len(path) else STOP_ID
            samples.append(SAPSample(memory.copy(), episode.instruction.tokens, step, target))
            if target != STOP_ID:
                memory.integrate_observation(
                    observe(world, target, config.observation_noise, rng), step + 1
                )
    return samples


def _sample_loss(policy: NavigationPolicy, sample: SAPSample, config: AgentConfig) -> torch.Tensor:
    instruction = encode_instruction(sample.tokens, policy)
    scores = decide(sample.memory, instruction, policy, sample.step, config.gamma_mode,
                    config.gamma_value, config.memory_type)
    return sap_loss(scores.fused, sample.expert_target)


def mean_sap_loss(policy: NavigationPolicy, samples: Sequence[SAPSample],
                  config: AgentConfig) -> float:
    """Mean imitation loss over samples, without gradients."""
    with torch.no_grad():
        return float(np.mean([float(_sample_loss(policy, s, config)) for s in samples]))


def train_policy(
    policy: NavigationPolicy,
    samples: Sequence[SAPSample],
    config: AgentConfig,
    epochs: int = 5,
    batch: int = 16,
    lr: float = 0.01,
    seed: int = 0,
    show_progress: bool = False
) -> List[float]:
    """
    Minimize the mean SAP loss with minibatch SGD.

    Args:
        policy: Policy trained in place.
        samples: Teacher-forced decisions.
        config: Agent knobs used when scoring (gamma mode, memory type).
        epochs: Passes over the samples.
        batch: Samples per update.
        lr: Learning rate; 0 leaves the parameters unchanged.
        seed: Shuffling seed.
        show_progress: Show a progress bar over epochs.

    Returns:
        Mean training loss of every epoch.

    Raises:
        TrainingDivergenceError: If a batch loss is not finite; carries
            the parameters from before the last update.
    """
    stepper = SGDStepper(policy, torch.optim.SGD(policy.parameters(), lr=lr), 'policy')
    rng = np.random.default_rng(seed)
    history = []
    policy.train()
    with ProgressTracker(epochs, "Policy epochs", show_progress, unit='epoch') as tracker:
        for epoch in range(1, epochs + 1):
            order = rng.permutation(len(samples))
            losses = []
            for start in range(0, len(order), batch):
                chunk = [samples[i] for i in order[start:start + batch]]
                loss = torch.stack([_sample_loss(policy, s, config) for s in chunk]).mean()
                losses.append(stepper.step(loss, epoch))
            history.append(float(np.mean(losses)) if losses else 0.0)
            logger.info("Policy epoch %d/%d: loss %.6f", epoch, epochs, history[-1])
            tracker.update(1, loss=f"{history[-1]:.4f}")
    policy.eval()
    return history


def next_action_accuracy(policy: NavigationPolicy, samples: Sequence[SAPSample],
                         config: AgentConfig) -> Tuple[float, float]:
    """
    Share of decisions whose argmax is the expert target.

    Returns:
        (accuracy, chance baseline = mean of 1 / candidate count).
    """
    hits = []
    chance = []
    with torch.no_grad():
        for sample in samples:
            instruction = encode_instruction(sample.tokens, policy)
            fused = decide(sample.memory, instruction, policy, sample.step, config.gamma_mode,
                           config.gamma_value, config.memory_type).fused
            ids = sorted(fused)
            best = ids[int(np.argmax([float(fused[i]) for i in ids]))]
            hits.append(best == sample.expert_target)
            chance.append(1.0 / len(ids))
    return float(np.mean(hits)), float(np.mean(chance))


# -- waypoint model ------------------------------------------------------

def harvest_waypoint_samples(worlds: Sequence[WorldGraph]) -> List[WaypointSample]:
    """Every node with its neighbors inside the heatmap range as a target heatmap."""
    samples = []
    for world in worlds:
        for node in world.nodes:
            neighbors = []
            for neighbor_id in world.neighbors(node.id):
                offset = world.node(neighbor_id).position - node.position
                distance = euclidean(node.position, world.node(neighbor_id).position)
                if 0.0 < distance <= MAX_RANGE:
                    neighbors.append((heading_of(offset[0], offset[1]), distance))
            samples.append(WaypointSample(node.appearance.copy(), node.geometry.copy(),
                                          heatmap_gt(neighbors).grid))
    return samples


def train_waypoint(
    model: WaypointModel,
    samples: Sequence[WaypointSample],
    epochs: int = 20,
    lr: float = 10.0,
    batch: Optional[int] = None,
    seed: int = 0
) -> List[float]:
    """
    Minimize the per-cell heatmap MSE; full batch unless ``batch`` is set.

    Returns:
        Mean loss of every epoch, measured before that epoch's updates.
    """
    appearance = torch.as_tensor(np.stack([s.appearance for s in samples]))
    geometry = torch.as_tensor(np.stack([s.geometry for s in samples]))
    targets = torch.as_tensor(np.stack([s.heatmap for s in samples]))
    batch = batch or len(samples)
    stepper = SGDStepper(model, torch.optim.SGD(model.parameters(), lr=lr), 'waypoint')
    rng = np.random.default_rng(seed)
    history = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(samples)) if batch < len(samples) else np.arange(len(samples))
        losses = []
        for start in range(0, len(order), batch):
            index = torch.as_tensor(order[start:start + batch])
            loss = waypoint_loss(model(appearance[index], geometry[index]), targets[index])
            losses.append(stepper.step(loss, epoch))
        history.append(float(np.mean(losses)))
        logger.info("Waypoint epoch %d/%d: loss %.6f", epoch, epochs, history[-1])
    return history


# -- room model ----------------------------------------------------------

def harvest_room_samples(worlds: Sequence[WorldGraph]) -> List[RoomSample]:
    return [RoomSample(node.semantic.copy(), node.geometry.copy(), node.room_type)
            for world in worlds for node in world.nodes]


def train_room(model: RoomTypeModel, samples: Sequence[RoomSample], epochs: int = 100,
               lr: float = 0.5) -> List[float]:
    """Full-batch cross-entropy training of the room classifier."""
    semantic = torch.as_tensor(np.stack([s.semantic for s in samples]))
    geometry = torch.as_tensor(np.stack([s.geometry for s in samples]))
    labels = np.array([s.room_type for s in samples])
    stepper = SGDStepper(model, torch.optim.SGD(model.parameters(), lr=lr), 'room')
    history = []
    for epoch in range(1, epochs + 1):
        loss = room_loss(model(semantic, geometry), labels)
        history.append(stepper.step(loss, epoch))
    if history:
        logger.info("Room model: loss %.6f after %d epochs", history[-1], epochs)
    return history


def room_accuracy(model: RoomTypeModel, samples: Sequence[RoomSample]) -> float:
    return float(np.mean([model.predict(s.semantic, s.geometry) == s.room_type for s in samples]))


# -- learned imaginer ----------------------------------------------------

def harvest_imaginer_samples(world: WorldGraph, episodes: Sequence[Episode],
                             history_length: int = 2) -> List[ImaginerSample]:
    """Transitions along expert paths: the last visits, then the next node."""
    samples = []
    for episode in episodes:
        path = [world.node(n) for n in episode.expert_path]
        for k in range(1, len(path)):
            history = tuple(
                HistoryEntry(n.geometry.copy(), n.semantic.copy(), n.position.copy())
                for n in path[max(0, k - history_length):k]
            )
            target = path[k]
            samples.append(ImaginerSample(history, target.position.copy(),
                                          path[k - 1].appearance.copy(), target.appearance.copy(),
                                          target.geometry.copy(), target.semantic.copy()))
    return samples


def train_imaginer(model: LearnedImaginerModel, samples: Sequence[ImaginerSample],
                   epochs: int = 30, lr: float = 0.05, lam: float = 0.5) -> List[float]:
    """
    Full-batch training of the learned imaginer.

    Structure: inpaint_lite_loss against the target's geometry and
    semantic. Appearance: squared error of the unit-normalized prediction,
    conditioned on the true structure.
    """
    inputs = torch.as_tensor(np.stack([model.history_vector(s.history, s.position) for s in samples]))
    parent = torch.as_tensor(np.stack([s.parent_appearance for s in samples]))
    appearance = torch.as_tensor(np.stack([s.appearance for s in samples]))
    geometry = torch.as_tensor(np.stack([s.geometry for s in samples]))
    semantic = torch.as_tensor(np.stack([s.semantic for s in samples]))
    stepper = SGDStepper(model, torch.optim.SGD(model.parameters(), lr=lr), 'imaginer')
    history = []
    for epoch in range(1, epochs + 1):
        pred_g, pred_s = model.forward_structure(inputs)
        structure = inpaint_lite_loss(pred_s, pred_g, semantic, geometry, lam)
        pred_a = F.normalize(model.forward_appearance(parent, geometry, semantic), dim=-1)
        loss = structure + torch.mean((pred_a - appearance) ** 2)
        history.append(stepper.step(loss, epoch))
    if history:
        logger.info("Imaginer: loss %.6f after %d epochs", history[-1], epochs)
    return history


# -- full schedule -------------------------------------------------------

@dataclass
class TrainingOutcome:
    """
    Summary of one training schedule.

    Attributes:
        losses: Loss history of every model.
        samples: Policy decisions trained on.
        room_accuracy: Room classifier accuracy on every training node.
        held_out: Next-action accuracy on the held-out world, when there is one.
        durations: Seconds spent on the auxiliary models and on the policy.
    """
    losses: Dict[str, List[float]]
    samples: int
    room_accuracy: float
    held_out: Optional[Dict[str, Any]] = None
    durations: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        summary = {'losses': self.losses, 'samples': self.samples,
                   'room_accuracy': self.room_accuracy}
        if self.held_out is not None:
            summary['held_out'] = dict(self.held_out)
        return summary


def training_episodes(config: RunConfig, worlds: Sequence[WorldGraph]) -> List[List[Episode]]:
    """Expert episodes of every training world, with disjoint episode indices."""
    start = config.training.seed_start
    return [build_episodes(world, start + offset, config.categories, config.training.seed,
                           first_index=offset * 10_000)
            for offset, world in enumerate(worlds)]


def fit_bundle(
    config: RunConfig,
    bundle: AgentBundle,
    worlds: Sequence[WorldGraph],
    show_progress: bool = False
) -> TrainingOutcome:
    """
    Train every model of a bundle in place.

    The room model and the waypoint model are fitted on all worlds, the
    learned imaginer next, and the policy last on decisions recorded with
    the trained imagination. With more than one world the last one is
    held out of the imaginer and policy data and scored for next-action
    accuracy.

    Raises:
        TrainingDivergenceError: If any loss stops being finite; the
            bundle keeps the parameters reached so far.
    """
    schedule = config.training
    agent = config.agent
    episodes = training_episodes(config, worlds)
    held_out = len(worlds) - 1 if len(worlds) > 1 else None
    fit_indices = [i for i in range(len(worlds)) if i != held_out]
    losses: Dict[str, List[float]] = {}
    durations: Dict[str, float] = {}

    started = time.perf_counter()
    room_samples = harvest_room_samples(worlds)
    losses['room'] = train_room(bundle.room_model, room_samples,
                                schedule.room_epochs, schedule.room_lr)
    losses['waypoint'] = train_waypoint(bundle.waypoint_model, harvest_waypoint_samples(worlds),
                                        schedule.waypoint_epochs, schedule.waypoint_lr,
                                        seed=schedule.seed)
    imaginer_samples = [sample for i in fit_indices
                        for sample in harvest_imaginer_samples(worlds[i], episodes[i],
                                                               agent.history_length)]
    losses['imaginer'] = train_imaginer(bundle.imaginer_model, imaginer_samples,
                                        schedule.imaginer_epochs, schedule.imaginer_lr)
    durations['auxiliary'] = time.perf_counter() - started

    started = time.perf_counter()
    samples = [s for i in fit_indices
               for s in build_sap_samples(worlds[i], episodes[i], agent, bundle)]
    losses['policy'] = train_policy(bundle.policy, samples, agent, schedule.epochs,
                                    schedule.batch, schedule.lr, schedule.seed, show_progress)
    durations['policy'] = time.perf_counter() - started

    outcome = TrainingOutcome(losses, len(samples), room_accuracy(bundle.room_model, room_samples),
                              durations=durations)
    if held_out is not None:
        held = build_sap_samples(worlds[held_out], episodes[held_out], agent, bundle)
        accuracy, chance = next_action_accuracy(bundle.policy, held, agent)
        outcome.held_out = {'world_seed': schedule.seed_start + held_out,
                            'decisions': len(held), 'accuracy': accuracy, 'chance': chance}
        logger.info("Held-out next-action accuracy %.3f (chance %.3f)", accuracy, chance)
    return outcome
