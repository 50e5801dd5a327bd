"""
Room-Type Module

Room-conditioned refinement of imagined semantics and the lite room-type
classifier that picks the room when the ground truth is not available.
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np
import torch
from torch import nn

from hybridnav.exceptions import ConfigurationError, LookupFailure, ShapeError
from hybridnav.policy.layers import uniform_init_


DEFAULT_PRIOR_WEIGHT = 2.0


@dataclass(frozen=True)
class RoomWeightDict:
    """
    room type -> non-negative weight per object.

    Raises:
        ConfigurationError: If a weight is negative.
    """
    weights: Dict[int, np.ndarray]

    def __post_init__(self):
        frozen = {}
        for room_type, row in self.weights.items():
            row = np.array(row, dtype=np.float64)
            if np.any(row < 0) or not np.all(np.isfinite(row)):
                raise ConfigurationError(
                    f"Room weights of room type {room_type} must be non-negative.",
                    details={'room_type': room_type}
                )
            row.setflags(write=False)
            frozen[int(room_type)] = row
        object.__setattr__(self, 'weights', frozen)

    @classmethod
    def from_priors(
        cls,
        priors: Mapping[int, tuple],
        object_vocab_size: int,
        room_vocab_size: int,
        weight: float = DEFAULT_PRIOR_WEIGHT
    ) -> 'RoomWeightDict':
        """``weight`` on the objects of each room type's prior, 0 elsewhere."""
        weights = {}
        for room_type in range(room_vocab_size):
            row = np.zeros(object_vocab_size)
            row[list(priors.get(room_type, ()))] = weight
            weights[room_type] = row
        return cls(weights)

    @classmethod
    def for_world(cls, world, weight: float = DEFAULT_PRIOR_WEIGHT) -> 'RoomWeightDict':
        return cls.from_priors(world.object_priors, world.object_vocab_size,
                               world.room_vocab_size, weight)

    def row(self, room_type: int) -> np.ndarray:
        """
        Weights of a room type.

        Raises:
            LookupFailure: If the room type is unknown.
        """
        try:
            return self.weights[int(room_type)]
        except (KeyError, TypeError, ValueError):
            raise LookupFailure(
                f"Unknown room type {room_type}.",
                details={'room_type': room_type, 'known': sorted(self.weights)}
            )


def room_reweight(semantic: np.ndarray, room_type: int, w: RoomWeightDict) -> np.ndarray:
    """
    Refine an object distribution with its room's weights.

    Returns semantic * (1 + w[room_type]), renormalized to sum to 1.

    Raises:
        LookupFailure: If the room type is unknown.
        ShapeError: If the lengths differ.

    Example:
        >>> w = RoomWeightDict({0: [1.0, 0.0, 0.0, 0.0]})
        >>> room_reweight(np.full(4, 0.25), 0, w)
        array([0.4, 0.2, 0.2, 0.2])
    """
    row = w.row(room_type)
    semantic = np.asarray(semantic, dtype=np.float64)
    if semantic.shape != row.shape:
        raise ShapeError(
            "Semantic and room weight lengths differ.",
            details={'semantic': list(semantic.shape), 'weights': list(row.shape)}
        )
    refined = semantic * (1.0 + row)
    return refined / refined.sum()


class RoomTypeModel(nn.Module):
    """
    Linear softmax classifier of room type from (semantic, geometry).

    Args:
        object_vocab_size: Length of the semantic channel.
        geometry_dim: Length of the geometry channel.
        room_vocab_size: Number of room types.
        seed: Initialization seed.
    """

    def __init__(self, object_vocab_size: int, geometry_dim: int, room_vocab_size: int,
                 seed: int = 0):
        super().__init__()
        self.object_vocab_size = object_vocab_size
        self.geometry_dim = geometry_dim
        self.room_vocab_size = room_vocab_size
        self.classifier = nn.Linear(object_vocab_size + geometry_dim, room_vocab_size)
        self.to(torch.float64)
        uniform_init_(self, torch.Generator().manual_seed(int(seed)))

    def spec(self) -> Dict[str, int]:
        return {'object_vocab_size': self.object_vocab_size, 'geometry_dim': self.geometry_dim,
                'room_vocab_size': self.room_vocab_size}

    @classmethod
    def from_spec(cls, spec: Dict[str, int]) -> 'RoomTypeModel':
        return cls(spec['object_vocab_size'], spec['geometry_dim'], spec['room_vocab_size'])

    def forward(self, semantic: torch.Tensor, geometry: torch.Tensor) -> torch.Tensor:
        """Room logits, (R,) or (n, R)."""
        x = torch.cat([torch.as_tensor(semantic, dtype=torch.float64),
                       torch.as_tensor(geometry, dtype=torch.float64)], dim=-1)
        if x.shape[-1] != self.classifier.in_features:
            raise ShapeError(
                f"Room model expects {self.classifier.in_features} inputs, got {x.shape[-1]}.",
                details={'inputs': int(x.shape[-1])}
            )
        return self.classifier(x)

    def predict(self, semantic: np.ndarray, geometry: np.ndarray) -> int:
        """Most likely room type, ties to the lowest index."""
        with torch.no_grad():
            logits = self.forward(semantic, geometry).numpy()
        return int(np.argmax(logits))
