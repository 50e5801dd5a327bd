"""
Harness Module

Episode loop, benchmark construction, training loops, parallel
evaluation, ablation suites and their statistics.
"""

from hybridnav.harness.seeds import splitmix64, derive_seed
from hybridnav.harness.benchmark import (
    Episode,
    build_benchmark,
    build_episodes,
    check_benchmark_size,
    sample_episode,
    training_worlds,
    world_for_seed,
)
from hybridnav.harness.agent import AgentBundle
from hybridnav.harness.runner import EpisodeResult, StepLog, new_memory, run_episode
from hybridnav.harness.training import (
    SAPSample,
    WaypointSample,
    RoomSample,
    ImaginerSample,
    build_sap_samples,
    mean_sap_loss,
    train_policy,
    next_action_accuracy,
    harvest_waypoint_samples,
    train_waypoint,
    harvest_room_samples,
    train_room,
    room_accuracy,
    harvest_imaginer_samples,
    train_imaginer,
    SGDStepper,
    TrainingOutcome,
    training_episodes,
    fit_bundle,
)
from hybridnav.harness.evaluation import evaluate_episodes, score_results
from hybridnav.harness.analysis import (
    BOOTSTRAP_RESAMPLES,
    GapEstimate,
    bootstrap_gap,
    spearman_trend,
)
from hybridnav.harness.checks import (
    GradCheckResult,
    RoundTripResult,
    policy_gradcheck,
    waypoint_roundtrip,
)
from hybridnav.harness.ablation import (
    SUITES,
    AblationRow,
    AblationReport,
    suite_rows,
    run_ablation,
)

__all__ = [
    'splitmix64',
    'derive_seed',
    'Episode',
    'build_benchmark',
    'build_episodes',
    'check_benchmark_size',
    'sample_episode',
    'training_worlds',
    'world_for_seed',
    'AgentBundle',
    'EpisodeResult',
    'StepLog',
    'new_memory',
    'run_episode',
    'SAPSample',
    'WaypointSample',
    'RoomSample',
    'ImaginerSample',
    'build_sap_samples',
    'mean_sap_loss',
    'train_policy',
    'next_action_accuracy',
    'harvest_waypoint_samples',
    'train_waypoint',
    'harvest_room_samples',
    'train_room',
    'room_accuracy',
    'harvest_imaginer_samples',
    'train_imaginer',
    'SGDStepper',
    'TrainingOutcome',
    'training_episodes',
    'fit_bundle',
    'evaluate_episodes',
    'score_results',
    'BOOTSTRAP_RESAMPLES',
    'GapEstimate',
    'bootstrap_gap',
    'spearman_trend',
    'GradCheckResult',
    'RoundTripResult',
    'policy_gradcheck',
    'waypoint_roundtrip',
    'SUITES',
    'AblationRow',
    'AblationReport',
    'suite_rows',
    'run_ablation',
]
