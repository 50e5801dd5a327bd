"""
Waypoint Model Module

Lite waypoint predictor: a node's appearance and geometry are merged by a
tanh layer and decoded by a two-layer perceptron into 1440 logits, one per
heatmap cell. Peaks of the sigmoid heatmap become the absolute positions
where the imagination tree grows next.
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from hybridnav.exceptions import ShapeError
from hybridnav.graph import offset_from_heading
from hybridnav.imagination.heatmap import GRID_SHAPE, Heatmap, nms_peaks
from hybridnav.policy.layers import uniform_init_


logger = logging.getLogger(__name__)

CELLS = GRID_SHAPE[0] * GRID_SHAPE[1]


class WaypointModel(nn.Module):
    """
    (appearance, geometry) -> 120 x 12 heatmap logits.

    Args:
        appearance_dim: Length of the appearance channel.
        geometry_dim: Length of the geometry channel.
        hidden: Width of the merge layer and the perceptron.
        seed: Initialization seed.
    """

    def __init__(self, appearance_dim: int, geometry_dim: int, hidden: int = 64, seed: int = 0):
        super().__init__()
        self.appearance_dim = appearance_dim
        self.geometry_dim = geometry_dim
        self.hidden = hidden
        self.merge = nn.Linear(appearance_dim + geometry_dim, hidden)
        self.decoder = nn.Sequential(
            nn.Linear(hidden, hidden),
            nn.ReLU(),
            nn.Linear(hidden, CELLS),
        )
        self.to(torch.float64)
        uniform_init_(self, torch.Generator().manual_seed(int(seed)))

    def spec(self) -> Dict[str, int]:
        return {'appearance_dim': self.appearance_dim, 'geometry_dim': self.geometry_dim,
                'hidden': self.hidden}

    @classmethod
    def from_spec(cls, spec: Dict[str, int]) -> 'WaypointModel':
        return cls(spec['appearance_dim'], spec['geometry_dim'], spec['hidden'])

    def forward(self, appearance: torch.Tensor, geometry: torch.Tensor) -> torch.Tensor:
        """Heatmap probabilities, (120, 12) or (n, 120, 12)."""
        appearance = torch.as_tensor(appearance, dtype=torch.float64)
        geometry = torch.as_tensor(geometry, dtype=torch.float64)
        if (appearance.shape[-1] != self.appearance_dim
                or geometry.shape[-1] != self.geometry_dim):
            raise ShapeError(
                "Waypoint model channel dimensions do not match the inputs.",
                details={'expected': [self.appearance_dim, self.geometry_dim],
                         'got': [int(appearance.shape[-1]), int(geometry.shape[-1])]}
            )
        merged = torch.tanh(self.merge(torch.cat([appearance, geometry], dim=-1)))
        logits = self.decoder(merged)
        return torch.sigmoid(logits).reshape(*logits.shape[:-1], *GRID_SHAPE)


def predict_heatmap(appearance: np.ndarray, geometry: np.ndarray, model: WaypointModel) -> Heatmap:
    """
    Predict the waypoint heatmap of one node.

    Raises:
        ShapeError: If the channel dimensions do not match the model.

    Example:
        >>> model = WaypointModel(4, 2)
        >>> predict_heatmap(np.ones(4) / 2, np.zeros(2), model).grid.shape
        (120, 12)
    """
    with torch.no_grad():
        grid = model(appearance, geometry).numpy()
    return Heatmap(grid)


class WaypointPredictor:
    """
    Heatmap model plus NMS, read out as absolute positions.

    Offsets follow the heading convention of the graph module and keep the
    z coordinate of the node the waypoints are predicted around.

    Args:
        model: Trained WaypointModel.
        max_k: Maximum number of waypoints per node.
        window: NMS window (angular bins, radial bins).
    """

    def __init__(self, model: WaypointModel, max_k: int = 4, window: Tuple[int, int] = (5, 3)):
        self.model = model
        self.max_k = max_k
        self.window = tuple(window)

    def polar(self, appearance: np.ndarray, geometry: np.ndarray) -> List[Tuple[float, float]]:
        """(heading, distance) waypoints relative to the node."""
        heatmap = predict_heatmap(appearance, geometry, self.model)
        return nms_peaks(heatmap, self.max_k, self.window)

    def predict(
        self,
        position: Sequence[float],
        appearance: np.ndarray,
        geometry: np.ndarray
    ) -> List[np.ndarray]:
        """Absolute waypoint positions around ``position``."""
        origin = np.asarray(position, dtype=np.float64)
        positions = []
        for heading, distance in self.polar(appearance, geometry):
            dx, dy = offset_from_heading(heading, distance)
            positions.append(origin + np.array([dx, dy, 0.0]))
        logger.debug("Predicted %d waypoints around %s", len(positions), origin.tolist())
        return positions
