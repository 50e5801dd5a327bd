"""
hybridnav: Imagination-Hybrid Memory Navigation

A desk-scale engine for instruction-following navigation on synthetic
indoor graphs. The agent keeps a topological memory of what it has seen
and what it imagines beyond the frontier, and a graph-aware transformer
policy fuses both into its next move.

Core Modules:
    - world: Synthetic worlds, observations and templated instructions
    - memory: The hybrid memory map and imagination pruning
    - policy: Graph-aware scoring, fusion, actions and checkpoints
    - imagination: Imaginers, the imagination tree and waypoint heatmaps
    - evalmetrics: NE, TL, SR, OSR and SPL
    - harness: Episode loop, training, evaluation and ablations
    - performance: Worker pools and progress tracking
    - metadata: Run provenance
    - visualization: Plots of run outputs
    - cli: Command-line interface
"""

__version__ = "0.1.0"

from hybridnav.config import (
    WorldConfig,
    ObservationNoise,
    ImaginerConfig,
    AgentConfig,
    PolicyConfig,
    TrainingConfig,
    RunConfig,
)
from hybridnav.exceptions import (
    HybridNavError,
    ConfigurationError,
    ValidationError,
    TrainingDivergenceError,
    format_error_context,
    suggest_fix,
)
from hybridnav.world import WorldGraph, generate_world, generate_instruction, observe
from hybridnav.memory import MemoryMap, NodeKind
from hybridnav.policy import NavigationPolicy, decide, select_action
from hybridnav.imagination import OracleImaginer, imagine
from hybridnav.evalmetrics import EpisodeRecord, MetricsSummary, episode_metrics, aggregate
from hybridnav.harness import AgentBundle, run_episode, run_ablation

__all__ = [
    '__version__',
    'WorldConfig',
    'ObservationNoise',
    'ImaginerConfig',
    'AgentConfig',
    'PolicyConfig',
    'TrainingConfig',
    'RunConfig',
    'HybridNavError',
    'ConfigurationError',
    'ValidationError',
    'TrainingDivergenceError',
    'format_error_context',
    'suggest_fix',
    'WorldGraph',
    'generate_world',
    'generate_instruction',
    'observe',
    'MemoryMap',
    'NodeKind',
    'NavigationPolicy',
    'decide',
    'select_action',
    'OracleImaginer',
    'imagine',
    'EpisodeRecord',
    'MetricsSummary',
    'episode_metrics',
    'aggregate',
    'AgentBundle',
    'run_episode',
    'run_ablation',
]
