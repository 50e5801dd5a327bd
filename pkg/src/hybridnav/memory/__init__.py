"""
Memory Module

The hybrid topological memory map: node taxonomy, observation
integration, imagination pruning and embedding inputs.
"""

from hybridnav.memory.models import (
    STOP_ID,
    IMAGINATION_ID_START,
    NodeKind,
    Completeness,
    FeatureLayout,
    MemoryNode,
    EmbeddingInputs,
    KIND_INDEX,
)
from hybridnav.memory.pruning import pruning_criterion, criterion_values
from hybridnav.memory.map import (
    MemoryMap,
    integrate_observation,
    prune_imagination,
    embedding_inputs,
)

__all__ = [
    'STOP_ID',
    'IMAGINATION_ID_START',
    'NodeKind',
    'Completeness',
    'FeatureLayout',
    'MemoryNode',
    'EmbeddingInputs',
    'KIND_INDEX',
    'pruning_criterion',
    'criterion_values',
    'MemoryMap',
    'integrate_observation',
    'prune_imagination',
    'embedding_inputs',
]
