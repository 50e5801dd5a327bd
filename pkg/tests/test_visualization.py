"""
Tests for run plots.
"""

import matplotlib
matplotlib.use('Agg')

import matplotlib.pyplot as plt
import pytest

from hybridnav.imagination import heatmap_gt, nms_peaks
from hybridnav.visualization import gamma_frame, plot_ablation, plot_gamma_trend, plot_heatmap


ROWS = [
    {'label': 'hybrid', 'episodes': 4, 'NE': 1.2, 'TL': 9.0, 'SR': 75.0, 'OSR': 75.0, 'SPL': 0.6},
    {'label': 'reality', 'episodes': 4, 'NE': 2.5, 'TL': 7.5, 'SR': 50.0, 'OSR': 75.0, 'SPL': 0.4},
]


class TestGammaTrend:
    """Test suite for fusion factor plots."""

    def test_gamma_frame(self):
        frame = gamma_frame([[0.2, 0.4], [0.6]])
        assert list(frame.columns) == ['episode', 'step', 'gamma']
        assert frame['step'].tolist() == [1, 2, 1]
        assert frame['episode'].tolist() == [0, 0, 1]

    def test_plot_returns_figure(self):
        fig = plot_gamma_trend([[0.2, 0.4, 0.5], [0.3, 0.5]])
        assert isinstance(fig, plt.Figure)
        plt.close(fig)

    def test_saves_png(self, tmp_path):
        path = tmp_path / 'gamma.png'
        plot_gamma_trend([[0.2, 0.4], [0.3, 0.5]], output_path=str(path))
        assert path.exists()

    def test_empty(self):
        """Episodes that stopped at once have no gamma to plot."""
        with pytest.raises(ValueError):
            plot_gamma_trend([[], []])


class TestAblationPlot:
    """Test suite for ablation bars."""

    def test_plot_returns_figure(self):
        fig = plot_ablation(ROWS, title='memory')
        assert isinstance(fig, plt.Figure)
        assert fig.axes[0].get_title() == 'memory'
        plt.close(fig)

    def test_saves_png(self, tmp_path):
        path = tmp_path / 'ablation.png'
        rows = [dict(r, label=f"{r['label']}-{i}") for i in range(3) for r in ROWS]
        plot_ablation(rows, output_path=str(path))
        assert path.exists()

    def test_empty(self):
        with pytest.raises(ValueError):
            plot_ablation([])


class TestHeatmapPlot:
    """Test suite for waypoint heatmap plots."""

    def test_with_peaks(self, tmp_path):
        heatmap = heatmap_gt([(0.5, 1.0), (3.0, 2.0)])
        path = tmp_path / 'heatmap.png'
        fig = plot_heatmap(heatmap, nms_peaks(heatmap), output_path=str(path))
        assert isinstance(fig, plt.Figure)
        assert path.exists()

    def test_without_peaks(self):
        fig = plot_heatmap(heatmap_gt([(1.0, 1.5)]))
        assert len(fig.axes) == 2
        plt.close(fig)
