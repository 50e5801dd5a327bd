"""
Visualization Module

Fusion-factor trends, ablation bars and waypoint heatmaps.
"""

from hybridnav.visualization.plots import (
    gamma_frame,
    plot_gamma_trend,
    plot_ablation,
    plot_heatmap,
)

__all__ = [
    'gamma_frame',
    'plot_gamma_trend',
    'plot_ablation',
    'plot_heatmap',
]
