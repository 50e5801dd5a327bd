"""
Policy Module

Instruction encoding, graph-aware cross-modal scoring, the fusion factor,
score fusion, action selection, the imitation loss, gradient checking and
parameter checkpoints.
"""

from hybridnav.policy.layers import (
    MultiHeadAttention,
    SelfAttentionLayer,
    GraphAwareSelfAttentionLayer,
    CrossAttentionLayer,
    hop_buckets,
)
from hybridnav.policy.network import NavigationPolicy, NodeEncodings
from hybridnav.policy.decision import (
    Action,
    ScoreSet,
    encode_instruction,
    gasa_attention,
    cross_modal_encode,
    score_nodes,
    fusion_factor,
    assign_imagination,
    fuse_scores,
    action_probabilities,
    select_action,
    sap_loss,
    decide,
)
from hybridnav.policy.gradcheck import grad_check
from hybridnav.policy.checkpoint import (
    CHECKPOINT_VERSION,
    save_checkpoint,
    read_checkpoint,
    load_modules,
)

__all__ = [
    'MultiHeadAttention',
    'SelfAttentionLayer',
    'GraphAwareSelfAttentionLayer',
    'CrossAttentionLayer',
    'hop_buckets',
    'NavigationPolicy',
    'NodeEncodings',
    'Action',
    'ScoreSet',
    'encode_instruction',
    'gasa_attention',
    'cross_modal_encode',
    'score_nodes',
    'fusion_factor',
    'assign_imagination',
    'fuse_scores',
    'action_probabilities',
    'select_action',
    'sap_loss',
    'decide',
    'grad_check',
    'CHECKPOINT_VERSION',
    'save_checkpoint',
    'read_checkpoint',
    'load_modules',
]
