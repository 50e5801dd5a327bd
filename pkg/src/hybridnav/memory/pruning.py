"""
Pruning Criterion Module

Similarity between two memory nodes: feature cosine similarity minus the
mean squared difference of their positions.
"""

import numpy as np

from hybridnav.exceptions import UndefinedCosineError
from hybridnav.memory.models import MemoryNode


def criterion_values(
    feature_i: np.ndarray,
    position_i: np.ndarray,
    features: np.ndarray,
    positions: np.ndarray,
    position_scale: float = 1.0
) -> np.ndarray:
    """
    Criterion of one node against many, vectorized.

    Args:
        feature_i: Feature of the reference node.
        position_i: Position of the reference node.
        features: (n, d) features of the other nodes.
        positions: (n, 3) positions of the other nodes.
        position_scale: Meters the position difference is divided by.

    Raises:
        UndefinedCosineError: If any feature has zero norm.
    """
    norm_i = np.linalg.norm(feature_i)
    norms = np.linalg.norm(features, axis=1)
    if norm_i == 0.0 or np.any(norms == 0.0):
        raise UndefinedCosineError(
            "Cosine similarity is undefined for a zero-norm feature.",
            details={'zero_norm_count': int(norm_i == 0.0) + int(np.sum(norms == 0.0))}
        )
    cosine = features @ feature_i / (norms * norm_i)
    mse = np.mean(((positions - position_i) / position_scale) ** 2, axis=1)
    return cosine - mse


def pruning_criterion(n_i: MemoryNode, n_j: MemoryNode, position_scale: float = 1.0) -> float:
    """
    Duplicate score of two memory nodes.

    cos(f_i, f_j) - mean((p_i - p_j)**2) over the three coordinates, with
    positions divided by ``position_scale`` first.

    Args:
        n_i: First node.
        n_j: Second node.
        position_scale: Meters per unit of the position term (default 1.0).

    Returns:
        Criterion value; 1.0 for identical nodes.

    Raises:
        UndefinedCosineError: If either feature has zero norm.

    Example:
        >>> a = MemoryNode(0, NodeKind.IMAGINATION, np.ones(4), np.zeros(3))
        >>> b = MemoryNode(1, NodeKind.IMAGINATION, np.ones(4), np.array([3.0, 0, 0]))
        >>> pruning_criterion(a, b)
        -2.0
    """
    norm_i = float(np.linalg.norm(n_i.feature))
    norm_j = float(np.linalg.norm(n_j.feature))
    if norm_i == 0.0 or norm_j == 0.0:
        raise UndefinedCosineError(
            "Cosine similarity is undefined for a zero-norm feature.",
            details={'node_ids': [n_i.id, n_j.id]}
        )
    cosine = float(np.dot(n_i.feature, n_j.feature)) / (norm_i * norm_j)
    diff = (np.asarray(n_i.position) - np.asarray(n_j.position)) / position_scale
    return cosine - float(np.mean(diff * diff))
