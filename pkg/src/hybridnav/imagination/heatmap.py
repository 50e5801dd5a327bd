"""
Waypoint Heatmap Module

Polar occupancy grid of candidate neighbor positions: 120 angular bins of
3 degrees by 12 radial bins of 0.25 m, covering 360 degrees and 3 m. The
angular axis wraps. Ground-truth grids splat a Gaussian per neighbor and
waypoints are read back with non-maximum suppression.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.ndimage import maximum_filter

from hybridnav.exceptions import DomainError, ExportError, ShapeError
from hybridnav.graph import TWO_PI


logger = logging.getLogger(__name__)

ANGULAR_BINS = 120
RADIAL_BINS = 12
ANGULAR_BIN_DEGREES = 3.0
RADIAL_BIN_METERS = 0.25
MAX_RANGE = RADIAL_BINS * RADIAL_BIN_METERS
GRID_SHAPE = (ANGULAR_BINS, RADIAL_BINS)

KERNEL_SIGMA = 1.0
KERNEL_RADIUS = 3


@dataclass(frozen=True)
class Heatmap:
    """
    A 120 x 12 grid with values in [0, 1]; row = angular bin.

    Raises:
        ShapeError: If the grid is not 120 x 12.
        DomainError: If a value lies outside [0, 1].
    """
    grid: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=np.float64)
        if grid.shape != GRID_SHAPE:
            raise ShapeError(
                f"Heatmap grid must be {GRID_SHAPE}, got {grid.shape}.",
                details={'shape': list(grid.shape)}
            )
        if np.any(~np.isfinite(grid)) or grid.min() < 0.0 or grid.max() > 1.0:
            raise DomainError("Heatmap values must lie in [0, 1].",
                              details={'min': float(np.nanmin(grid)), 'max': float(np.nanmax(grid))})
        grid.setflags(write=False)
        object.__setattr__(self, 'grid', grid)

    @classmethod
    def zeros(cls) -> 'Heatmap':
        return cls(np.zeros(GRID_SHAPE))

    def to_frame(self) -> pd.DataFrame:
        """DataFrame with one row per angular bin and one column per radial bin."""
        frame = pd.DataFrame(
            self.grid,
            columns=[f"r{r}" for r in range(RADIAL_BINS)],
        )
        frame.index.name = 'angular_bin'
        return frame

    def to_csv(self, path) -> Path:
        """
        Export as a 120 x 12 CSV (row = angular bin).

        Raises:
            ExportError: If the file cannot be written.
        """
        target = Path(path)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            self.to_frame().to_csv(target, float_format='%.17g')
        except OSError as e:
            raise ExportError(f"Cannot write heatmap {target}: {e}", details={'path': str(target)})
        return target

    @classmethod
    def from_csv(cls, path) -> 'Heatmap':
        frame = pd.read_csv(path, index_col='angular_bin')
        return cls(frame.to_numpy(dtype=np.float64))


def polar_bin(heading: float, distance: float) -> Tuple[int, int]:
    """
    (angular bin, radial bin) of a heading in radians and a distance in meters.

    Raises:
        DomainError: If the distance is not in (0, 3].
    """
    if not math.isfinite(distance) or not 0.0 < distance <= MAX_RANGE:
        raise DomainError(
            f"Waypoint distance {distance!r} outside (0, {MAX_RANGE}] m.",
            details={'distance': distance, 'valid_range': f'(0, {MAX_RANGE}]'}
        )
    degrees = math.degrees(heading % TWO_PI)
    angular = int(math.floor(degrees / ANGULAR_BIN_DEGREES)) % ANGULAR_BINS
    radial = min(int(math.floor(distance / RADIAL_BIN_METERS)), RADIAL_BINS - 1)
    return angular, radial


def bin_center(angular: int, radial: int) -> Tuple[float, float]:
    """(heading radians, distance meters) at the center of a bin."""
    heading = math.radians((angular + 0.5) * ANGULAR_BIN_DEGREES)
    return heading, (radial + 0.5) * RADIAL_BIN_METERS


def heatmap_gt(neighbors: Sequence[Tuple[float, float]]) -> Heatmap:
    """
    Ground-truth heatmap of neighbor (heading, distance) pairs.

    Every neighbor splats a Gaussian with a one-bin sigma on both axes,
    truncated at three sigma and wrapped around the angular axis; overlapping
    splats keep the per-cell maximum, so each neighbor's own bin is 1.0.

    Raises:
        DomainError: If a distance is not in (0, 3].

    Example:
        >>> grid = heatmap_gt([(0.0, 1.0)]).grid
        >>> grid[0, 4]
        1.0
    """
    grid = np.zeros(GRID_SHAPE)
    offsets = np.arange(-KERNEL_RADIUS, KERNEL_RADIUS + 1)
    da, dr = np.meshgrid(offsets, offsets, indexing='ij')
    kernel = np.exp(-(da ** 2 + dr ** 2) / (2.0 * KERNEL_SIGMA ** 2))

    for heading, distance in neighbors:
        angular, radial = polar_bin(heading, distance)
        rows = (angular + offsets) % ANGULAR_BINS
        cols = radial + offsets
        valid = (cols >= 0) & (cols < RADIAL_BINS)
        block = grid[np.ix_(rows, cols[valid])]
        grid[np.ix_(rows, cols[valid])] = np.maximum(block, kernel[:, valid])
    return Heatmap(grid)


def nms_peaks(
    heatmap: Heatmap,
    max_k: int = 4,
    window: Tuple[int, int] = (5, 3)
) -> List[Tuple[float, float]]:
    """
    Strict local maxima of a heatmap as (heading radians, distance meters).

    A cell is a peak when it is positive and larger than every other cell of
    its window (wrapping on the angular axis, nothing beyond the radial
    ends). Peaks are sorted by value, ties by lower angular then lower
    radial bin, and mapped to bin centers.

    Args:
        heatmap: Heatmap to read.
        max_k: Maximum number of peaks, at least 1.
        window: Odd (angular, radial) window sizes.

    Returns:
        Up to max_k waypoints; empty for a flat map.
    """
    if max_k < 1 or len(window) != 2 or any(w < 1 or w % 2 == 0 for w in window):
        raise ShapeError(
            "nms_peaks needs max_k >= 1 and an odd window on both axes.",
            details={'max_k': max_k, 'window': list(window)}
        )
    footprint = np.ones(window, dtype=bool)
    footprint[window[0] // 2, window[1] // 2] = False
    half_a, half_r = window[0] // 2, window[1] // 2
    padded = np.pad(heatmap.grid, ((half_a, half_a), (0, 0)), mode='wrap')
    padded = np.pad(padded, ((0, 0), (half_r, half_r)), constant_values=-np.inf)
    if footprint.any():
        neighborhood = maximum_filter(padded, footprint=footprint, mode='constant', cval=-np.inf)
    else:
        neighborhood = np.full_like(padded, -np.inf)
    neighborhood = neighborhood[half_a:half_a + ANGULAR_BINS, half_r:half_r + RADIAL_BINS]
    peaks = np.argwhere((heatmap.grid > neighborhood) & (heatmap.grid > 0.0))
    ranked = sorted(
        ((float(heatmap.grid[a, r]), int(a), int(r)) for a, r in peaks),
        key=lambda item: (-item[0], item[1], item[2])
    )
    return [bin_center(a, r) for _, a, r in ranked[:max_k]]
