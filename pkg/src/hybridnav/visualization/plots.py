"""
Run Visualization Module

Plots of run outputs: the fusion factor per step, ablation rows side by
side and waypoint heatmaps.
"""

from typing import Dict, Optional, Sequence

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from hybridnav.imagination.heatmap import ANGULAR_BIN_DEGREES, RADIAL_BIN_METERS, Heatmap

sns.set_style("whitegrid")
plt.rcParams['figure.dpi'] = 100
plt.rcParams['savefig.dpi'] = 300
plt.rcParams['font.size'] = 10


def _finish(fig: plt.Figure, output_path: Optional[str]) -> plt.Figure:
    if output_path:
        fig.savefig(output_path, bbox_inches='tight')
        plt.close(fig)
    else:
        fig.tight_layout()
    return fig


def gamma_frame(gammas: Sequence[Sequence[float]]) -> pd.DataFrame:
    """Long table (episode, step, gamma) from per-episode gamma lists."""
    rows = [{'episode': e, 'step': s + 1, 'gamma': g}
            for e, series in enumerate(gammas) for s, g in enumerate(series)]
    return pd.DataFrame(rows, columns=['episode', 'step', 'gamma'])


def plot_gamma_trend(
    gammas: Sequence[Sequence[float]],
    output_path: Optional[str] = None,
    figsize: tuple = (7, 4)
) -> plt.Figure:
    """
    Mean fusion factor per step with a 95% band.

    Args:
        gammas: One gamma series per episode (from the step logs).
        output_path: Optional PNG path.
        figsize: Figure size in inches.

    Raises:
        ValueError: If no episode took a step.
    """
    frame = gamma_frame(gammas)
    if frame.empty:
        raise ValueError("No gamma values to plot")
    fig, ax = plt.subplots(figsize=figsize)
    sns.lineplot(data=frame, x='step', y='gamma', errorbar=('ci', 95), marker='o', ax=ax)
    ax.set_xlabel('Step')
    ax.set_ylabel('Fusion factor')
    ax.set_ylim(0.0, 1.0)
    ax.set_title('Reliance on imagination per step', fontweight='bold')
    return _finish(fig, output_path)


def plot_ablation(
    rows: Sequence[Dict[str, float]],
    title: str = 'Ablation',
    output_path: Optional[str] = None,
    figsize: tuple = (9, 4)
) -> plt.Figure:
    """
    SR and SPL of ablation rows as grouped bars.

    SPL is drawn as a percentage next to SR.

    Args:
        rows: Report rows with 'label', 'SR' (percent) and 'SPL' (fraction).
        title: Figure title (usually the suite name).
        output_path: Optional PNG path.
    """
    if not rows:
        raise ValueError("rows cannot be empty")
    frame = pd.DataFrame(list(rows))
    long = pd.concat([
        pd.DataFrame({'label': frame['label'], 'metric': 'SR', 'value': frame['SR']}),
        pd.DataFrame({'label': frame['label'], 'metric': 'SPL', 'value': 100.0 * frame['SPL']}),
    ])
    fig, ax = plt.subplots(figsize=figsize)
    sns.barplot(data=long, x='label', y='value', hue='metric', ax=ax)
    for container in ax.containers:
        ax.bar_label(container, fmt='%.1f', fontsize=8)
    ax.set_xlabel('')
    ax.set_ylabel('%')
    ax.set_title(title, fontweight='bold')
    if len(frame) > 4:
        ax.tick_params(axis='x', rotation=30)
    return _finish(fig, output_path)


def plot_heatmap(
    heatmap: Heatmap,
    peaks: Sequence[tuple] = (),
    output_path: Optional[str] = None,
    figsize: tuple = (5, 5)
) -> plt.Figure:
    """
    Waypoint heatmap on polar axes, with optional (heading, distance) peaks.
    """
    grid = heatmap.grid
    angles = np.deg2rad(np.arange(grid.shape[0] + 1) * ANGULAR_BIN_DEGREES)
    radii = np.arange(grid.shape[1] + 1) * RADIAL_BIN_METERS
    fig = plt.figure(figsize=figsize)
    ax = fig.add_subplot(projection='polar')
    ax.set_theta_zero_location('N')
    ax.set_theta_direction(-1)
    mesh = ax.pcolormesh(angles, radii, grid.T, cmap='viridis', vmin=0.0, vmax=1.0,
                         shading='flat')
    if peaks:
        headings, distances = zip(*peaks)
        ax.scatter(headings, distances, color='red', marker='x', s=40, label='waypoints')
        ax.legend(loc='lower right')
    fig.colorbar(mesh, ax=ax, shrink=0.7)
    ax.set_title('Waypoint heatmap', fontweight='bold')
    return _finish(fig, output_path)
