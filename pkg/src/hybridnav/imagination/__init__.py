"""
Imagination Module

The recurrent imagination tree: pluggable imaginers, room-type semantic
refinement, waypoint heatmaps with non-maximum suppression, the lite
training losses and merging imagined places into memory.
"""

from hybridnav.imagination.heatmap import (
    Heatmap,
    ANGULAR_BINS,
    RADIAL_BINS,
    MAX_RANGE,
    polar_bin,
    bin_center,
    heatmap_gt,
    nms_peaks,
)
from hybridnav.imagination.losses import (
    ClampCounter,
    clamp_counter,
    waypoint_loss,
    inpaint_lite_loss,
    room_loss,
)
from hybridnav.imagination.room import RoomWeightDict, RoomTypeModel, room_reweight
from hybridnav.imagination.waypoint import WaypointModel, WaypointPredictor, predict_heatmap
from hybridnav.imagination.imaginers import (
    HistoryEntry,
    Imaginer,
    NullImaginer,
    OracleImaginer,
    LearnedImaginer,
    LearnedImaginerModel,
    build_imaginer,
)
from hybridnav.imagination.tree import (
    Branch,
    FrontierEntry,
    GeneratedNode,
    ImaginationTree,
    init_tree,
    expand_tree,
    merge_into_memory,
    imagine,
)

__all__ = [
    'Heatmap',
    'ANGULAR_BINS',
    'RADIAL_BINS',
    'MAX_RANGE',
    'polar_bin',
    'bin_center',
    'heatmap_gt',
    'nms_peaks',
    'ClampCounter',
    'clamp_counter',
    'waypoint_loss',
    'inpaint_lite_loss',
    'room_loss',
    'RoomWeightDict',
    'RoomTypeModel',
    'room_reweight',
    'WaypointModel',
    'WaypointPredictor',
    'predict_heatmap',
    'HistoryEntry',
    'Imaginer',
    'NullImaginer',
    'OracleImaginer',
    'LearnedImaginer',
    'LearnedImaginerModel',
    'build_imaginer',
    'Branch',
    'FrontierEntry',
    'GeneratedNode',
    'ImaginationTree',
    'init_tree',
    'expand_tree',
    'merge_into_memory',
    'imagine',
]
