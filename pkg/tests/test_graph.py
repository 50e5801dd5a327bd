"""
Tests for the shared graph and geometry helpers.
"""

import math

import numpy as np
import pytest

from hybridnav.exceptions import NoPathError
from hybridnav.graph import (
    adjacency_from_edges,
    euclidean,
    heading_of,
    hop_matrix,
    lexicographic_shortest_path,
    offset_from_heading,
)


class TestHeading:
    """Test suite for the heading convention."""

    @pytest.mark.parametrize('dx, dy, expected', [
        (0.0, 1.0, 0.0),
        (1.0, 0.0, math.pi / 2),
        (0.0, -1.0, math.pi),
        (-1.0, 0.0, 3 * math.pi / 2),
    ])
    def test_compass_points(self, dx, dy, expected):
        """0 along +y, clockwise, +x at pi/2."""
        assert heading_of(dx, dy) == pytest.approx(expected)

    def test_zero_displacement(self):
        assert heading_of(0.0, 0.0) == 0.0

    def test_range(self):
        """Headings lie in [0, 2*pi)."""
        for angle in np.linspace(-10, 10, 41):
            h = heading_of(math.sin(angle), math.cos(angle))
            assert 0.0 <= h < 2 * math.pi

    def test_offset_inverts_heading(self):
        """offset_from_heading undoes heading_of."""
        dx, dy = offset_from_heading(heading_of(1.5, -2.0), 2.5)
        assert (dx, dy) == pytest.approx((1.5, -2.0))


class TestPaths:
    """Test suite for shortest paths and hop counts."""

    def test_euclidean(self):
        assert euclidean([0, 0, 0], [3, 4, 0]) == 5.0

    def test_unreachable(self):
        with pytest.raises(NoPathError):
            lexicographic_shortest_path({0: {}, 1: {}}, 0, 1)

    def test_adjacency_is_symmetric(self):
        adjacency = adjacency_from_edges([(0, 1, 2.0), (1, 2, 1.0)])
        assert adjacency[1] == {0: 2.0, 2: 1.0}
        assert adjacency[2] == {1: 1.0}

    def test_adjacency_restriction(self):
        adjacency = adjacency_from_edges([(0, 1, 2.0), (1, 2, 1.0)], allowed={0, 1})
        assert 2 not in adjacency

    def test_hop_matrix_with_hub(self):
        """The hub is one hop from every node without creating shortcuts."""
        hops = hop_matrix([0, 1, 2, 99], [(0, 1), (1, 2), (0, 99), (2, 99)], hub=99)
        assert hops[0, 2] == 2
        assert hops[3, 0] == hops[0, 3] == 1
        assert hops[3, 3] == 0

    def test_disconnected_pairs(self):
        hops = hop_matrix([0, 1, 2], [(0, 1)])
        assert hops[0, 2] == -1
        assert hops[0, 1] == 1
