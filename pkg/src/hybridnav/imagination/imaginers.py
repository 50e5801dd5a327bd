"""
Imaginers Module

Pluggable generators of the channels of unvisited places. An imaginer
first produces the structured channels (geometry, semantic) of a target
position from a branch history, then its appearance conditioned on the
parent appearance and the new structure.

    - OracleImaginer: ground truth of the nearest world node plus noise
    - LearnedImaginer: small perceptrons trained on visited transitions
    - NullImaginer: imagines nothing
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from hybridnav.config import ImaginerConfig
from hybridnav.exceptions import ConfigurationError, ShapeError
from hybridnav.policy.layers import uniform_init_


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HistoryEntry:
    """One (geometry, semantic, position) triple of a branch history."""
    geometry: np.ndarray
    semantic: np.ndarray
    position: np.ndarray


class Imaginer(ABC):
    """Base class of every imaginer."""

    kind: str = 'base'

    @property
    def generates(self) -> bool:
        """False for imaginers that never produce nodes."""
        return True

    @abstractmethod
    def imagine_structure(
        self,
        history: Sequence[HistoryEntry],
        position: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """(geometry, semantic) at ``position``."""

    @abstractmethod
    def imagine_appearance(
        self,
        parent_appearance: np.ndarray,
        geometry: np.ndarray,
        semantic: np.ndarray,
        position: np.ndarray
    ) -> np.ndarray:
        """Unit-norm appearance at ``position``."""

    def room_of(self, position: np.ndarray, geometry: np.ndarray,
                semantic: np.ndarray) -> Optional[int]:
        """Room type used to reweight the semantic; None skips reweighting."""
        return None


class NullImaginer(Imaginer):
    """Imagines nothing; the reality-only agent."""

    kind = 'null'

    @property
    def generates(self) -> bool:
        return False

    def imagine_structure(self, history, position):
        raise NotImplementedError("NullImaginer does not imagine.")

    def imagine_appearance(self, parent_appearance, geometry, semantic, position):
        raise NotImplementedError("NullImaginer does not imagine.")


class OracleImaginer(Imaginer):
    """
    Ground-truth channels of the world node nearest to the target position.

    With zero noise the channels are exact copies. Otherwise Gaussian noise
    of standard deviation ``noise`` is added to each channel; the semantic
    is clipped at zero and renormalized (uniform if nothing is left) and
    the appearance renormalized to unit norm.

    Args:
        world: Ground-truth WorldGraph.
        noise: Standard deviation sigma_im.
        seed: Seed of the private noise stream.
    """

    kind = 'oracle'

    def __init__(self, world, noise: float = 0.0, seed: int = 0):
        if noise < 0:
            raise ConfigurationError(
                f"Oracle noise must be non-negative (got {noise}).",
                details={'noise': noise, 'valid_range': '>= 0'}
            )
        self.world = world
        self.noise = float(noise)
        self.rng = np.random.default_rng(seed)
        self._ids = np.array([node.id for node in world.nodes])
        self._positions = np.stack([node.position for node in world.nodes])

    def nearest(self, position: np.ndarray):
        """World node nearest to a position, ties to the lowest id."""
        distances = np.linalg.norm(self._positions - np.asarray(position, dtype=np.float64), axis=1)
        candidates = np.flatnonzero(distances == distances.min())
        return self.world.node(int(self._ids[candidates].min()))

    def _perturb(self, values: np.ndarray) -> np.ndarray:
        if self.noise == 0.0:
            return values.copy()
        return values + self.rng.normal(0.0, self.noise, size=values.shape)

    def imagine_structure(self, history, position):
        node = self.nearest(position)
        geometry = self._perturb(node.geometry)
        semantic = self._perturb(node.semantic)
        if self.noise > 0.0:
            semantic = np.clip(semantic, 0.0, None)
            total = semantic.sum()
            semantic = semantic / total if total > 0 else np.full_like(semantic, 1.0 / len(semantic))
        return geometry, semantic

    def imagine_appearance(self, parent_appearance, geometry, semantic, position):
        node = self.nearest(position)
        appearance = self._perturb(node.appearance)
        if self.noise > 0.0:
            norm = np.linalg.norm(appearance)
            appearance = appearance / norm if norm > 0 else node.appearance.copy()
        return appearance

    def room_of(self, position, geometry, semantic):
        return self.nearest(position).room_type


class LearnedImaginerModel(nn.Module):
    """
    Structure and appearance perceptrons of the learned imaginer.

    The structure network reads ``history_length`` slots of (geometry,
    semantic, position relative to the target), zero-padded when the
    history is shorter, and outputs geometry plus semantic logits. The
    appearance network reads (parent appearance, geometry, semantic).
    """

    def __init__(self, appearance_dim: int, geometry_dim: int, object_vocab_size: int,
                 history_length: int = 2, hidden: int = 64, seed: int = 0):
        super().__init__()
        self.appearance_dim = appearance_dim
        self.geometry_dim = geometry_dim
        self.object_vocab_size = object_vocab_size
        self.history_length = history_length
        self.hidden = hidden
        slot = geometry_dim + object_vocab_size + 3
        self.structure = nn.Sequential(
            nn.Linear(history_length * slot, hidden),
            nn.Tanh(),
            nn.Linear(hidden, geometry_dim + object_vocab_size),
        )
        self.appearance = nn.Sequential(
            nn.Linear(appearance_dim + geometry_dim + object_vocab_size, hidden),
            nn.Tanh(),
            nn.Linear(hidden, appearance_dim),
        )
        self.to(torch.float64)
        uniform_init_(self, torch.Generator().manual_seed(int(seed)))

    def spec(self) -> Dict[str, int]:
        return {'appearance_dim': self.appearance_dim, 'geometry_dim': self.geometry_dim,
                'object_vocab_size': self.object_vocab_size,
                'history_length': self.history_length, 'hidden': self.hidden}

    @classmethod
    def from_spec(cls, spec: Dict[str, int]) -> 'LearnedImaginerModel':
        return cls(spec['appearance_dim'], spec['geometry_dim'], spec['object_vocab_size'],
                   spec['history_length'], spec['hidden'])

    def history_vector(self, history: Sequence[HistoryEntry], position) -> np.ndarray:
        """Flattened, zero-padded structure input of one target."""
        target = np.asarray(position, dtype=np.float64)
        slot = self.geometry_dim + self.object_vocab_size + 3
        vector = np.zeros(self.history_length * slot)
        recent = list(history)[-self.history_length:]
        for i, entry in enumerate(recent):
            if len(entry.geometry) != self.geometry_dim or len(entry.semantic) != self.object_vocab_size:
                raise ShapeError(
                    "History entry channel dimensions do not match the imaginer.",
                    details={'geometry': len(entry.geometry), 'semantic': len(entry.semantic)}
                )
            vector[i * slot:(i + 1) * slot] = np.concatenate(
                [entry.geometry, entry.semantic, np.asarray(entry.position) - target]
            )
        return vector

    def forward_structure(self, inputs: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """(geometry, semantic probabilities) for (n, input) or (input,) tensors."""
        out = self.structure(torch.as_tensor(inputs, dtype=torch.float64))
        geometry = out[..., :self.geometry_dim]
        semantic = torch.softmax(out[..., self.geometry_dim:], dim=-1)
        return geometry, semantic

    def forward_appearance(self, parent_appearance, geometry, semantic) -> torch.Tensor:
        """Unnormalized appearance."""
        x = torch.cat([torch.as_tensor(parent_appearance, dtype=torch.float64),
                       torch.as_tensor(geometry, dtype=torch.float64),
                       torch.as_tensor(semantic, dtype=torch.float64)], dim=-1)
        return self.appearance(x)


class LearnedImaginer(Imaginer):
    """
    Imaginer backed by a trained LearnedImaginerModel.

    Args:
        model: Trained perceptrons.
        room_model: Optional RoomTypeModel choosing the reweighting room.
    """

    kind = 'learned'

    def __init__(self, model: LearnedImaginerModel, room_model=None):
        self.model = model
        self.room_model = room_model

    def imagine_structure(self, history, position):
        vector = self.model.history_vector(history, position)
        with torch.no_grad():
            geometry, semantic = self.model.forward_structure(vector)
        return geometry.numpy(), semantic.numpy()

    def imagine_appearance(self, parent_appearance, geometry, semantic, position):
        with torch.no_grad():
            appearance = self.model.forward_appearance(parent_appearance, geometry, semantic).numpy()
        norm = np.linalg.norm(appearance)
        if norm == 0.0:
            return np.asarray(parent_appearance, dtype=np.float64).copy()
        return appearance / norm

    def room_of(self, position, geometry, semantic):
        if self.room_model is None:
            return None
        return self.room_model.predict(semantic, geometry)


def build_imaginer(config: ImaginerConfig, world=None, model: Optional[LearnedImaginerModel] = None,
                   room_model=None) -> Imaginer:
    """
    Imaginer selected by a config.

    Raises:
        ConfigurationError: If the oracle lacks a world or the learned
            imaginer lacks a trained model.
    """
    if config.kind == 'null':
        return NullImaginer()
    if config.kind == 'oracle':
        if world is None:
            raise ConfigurationError("The oracle imaginer needs the world.",
                                     details={'kind': config.kind})
        return OracleImaginer(world, config.noise, config.seed)
    if model is None:
        raise ConfigurationError(
            "The learned imaginer needs a trained model; train one or load a checkpoint.",
            details={'kind': config.kind}
        )
    return LearnedImaginer(model, room_model)
