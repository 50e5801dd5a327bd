"""
Imagination Losses Module

Training objectives of the lite auxiliary models: per-cell heatmap MSE for
the waypoint model, the cross-entropy plus mean-absolute structure loss for
the learned imaginer and room-type cross-entropy.

Inputs may be numpy arrays, Heatmaps or tensors; results are 0-dim float64
tensors so they can be back-propagated.
"""

import logging
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from hybridnav.exceptions import ConfigurationError, SupervisionError
from hybridnav.imagination.heatmap import Heatmap


logger = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-12
DEFAULT_INPAINT_WEIGHT = 0.5


@dataclass
class ClampCounter:
    """Counts how often predicted probabilities had to be clamped."""
    count: int = 0

    def reset(self) -> None:
        self.count = 0


clamp_counter = ClampCounter()


def _tensor(value) -> torch.Tensor:
    if isinstance(value, Heatmap):
        value = value.grid
    if isinstance(value, torch.Tensor):
        return value.to(torch.float64)
    return torch.as_tensor(np.asarray(value, dtype=np.float64))


def waypoint_loss(predicted, gt) -> torch.Tensor:
    """
    Mean squared per-cell difference between two heatmaps.

    Batched (n, 120, 12) inputs are averaged over every cell of every grid.

    Example:
        >>> float(waypoint_loss(np.zeros((120, 12)), np.ones((120, 12))))
        1.0
    """
    return torch.mean((_tensor(predicted) - _tensor(gt)) ** 2)


def inpaint_lite_loss(
    pred_semantic,
    pred_geometry,
    gt_semantic,
    gt_geometry,
    lam: float = DEFAULT_INPAINT_WEIGHT,
    counter: ClampCounter = None
) -> torch.Tensor:
    """
    Structure loss of the learned imaginer.

    -lam * sum(gt_s * log(pred_s)) + (1 - lam) * mean|pred_g - gt_g|, averaged
    over the batch for 2-D inputs. Predicted probabilities are clamped at
    1e-12 and every clamp where the ground truth is positive is counted.

    Args:
        pred_semantic: Predicted object distribution(s).
        pred_geometry: Predicted geometry vector(s).
        gt_semantic: Target object distribution(s).
        gt_geometry: Target geometry vector(s).
        lam: Weight in [0, 1] of the semantic term.
        counter: ClampCounter; the module-level counter by default.

    Raises:
        ConfigurationError: If lam is outside [0, 1].
    """
    if not 0.0 <= lam <= 1.0:
        raise ConfigurationError(
            f"Inpaint loss weight must lie in [0, 1] (got {lam}).",
            details={'lam': lam, 'valid_range': '[0, 1]'}
        )
    counter = clamp_counter if counter is None else counter
    pred_s, gt_s = _tensor(pred_semantic), _tensor(gt_semantic)
    pred_g, gt_g = _tensor(pred_geometry), _tensor(gt_geometry)

    clamped = (pred_s < PROBABILITY_FLOOR) & (gt_s > 0)
    if bool(clamped.any()):
        counter.count += int(clamped.sum())
        logger.warning("Clamped %d zero predicted probabilities at %.0e",
                       int(clamped.sum()), PROBABILITY_FLOOR)

    cross_entropy = -(gt_s * torch.log(pred_s.clamp(min=PROBABILITY_FLOOR))).sum(dim=-1)
    absolute = (pred_g - gt_g).abs().mean(dim=-1)
    return torch.mean(lam * cross_entropy + (1.0 - lam) * absolute)


def room_loss(predicted_logits, true_room) -> torch.Tensor:
    """
    Cross-entropy of softmax(logits) against the true room type.

    Accepts one logit vector with an integer label or a (n, R) batch with
    n labels.

    Raises:
        SupervisionError: If a label is outside the room vocabulary.
    """
    logits = _tensor(predicted_logits)
    batched = logits.dim() == 2
    logits = logits if batched else logits.unsqueeze(0)
    labels = torch.as_tensor(np.atleast_1d(np.asarray(true_room)), dtype=torch.long)
    rooms = logits.shape[-1]
    if labels.numel() != logits.shape[0] or bool(((labels < 0) | (labels >= rooms)).any()):
        raise SupervisionError(
            f"Room labels must lie in [0, {rooms}) and match the logits.",
            details={'labels': labels.tolist(), 'room_vocab_size': rooms}
        )
    return F.cross_entropy(logits, labels)
