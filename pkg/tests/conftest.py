"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from pktstats import PacketWindow, TrafficMatrix

# A small star plus a satellite source: s1 fans out to three destinations
# (twice to d1), while s2 sends a single packet into d1.
STAR_COUNTS = {
    ("s1", "d1"): 2,
    ("s1", "d2"): 1,
    ("s1", "d3"): 1,
    ("s2", "d1"): 1,
}


def make_records(pairs, protocol="TCP", ip_version=4, start_ts=0):
    """Packet tuples in canonical field order with sequential timestamps."""
    return [
        (start_ts + i, src, dst, protocol, ip_version)
        for i, (src, dst) in enumerate(pairs)
    ]


STAR_PAIRS = [
    ("s1", "d1"),
    ("s1", "d2"),
    ("s2", "d1"),
    ("s1", "d3"),
    ("s1", "d1"),
]


@pytest.fixture
def star_matrix() -> TrafficMatrix:
    return TrafficMatrix.from_counts(STAR_COUNTS)


@pytest.fixture
def star_window() -> PacketWindow:
    return PacketWindow(0, tuple(make_records(STAR_PAIRS)), 5)


def random_cells(rng: np.random.Generator, max_side: int = 80, max_cells: int = 300):
    """Random sparse count dict with partly overlapping endpoint namespaces.

    The destination namespace is shifted by a random offset so some runs share
    node identities across both roles and others keep them disjoint.
    """
    n_rows = int(rng.integers(1, max_side + 1))
    n_cols = int(rng.integers(1, max_side + 1))
    shift = int(rng.integers(0, n_rows + 1))
    n_cells = int(rng.integers(1, min(n_rows * n_cols, max_cells) + 1))
    rows = rng.integers(0, n_rows, size=n_cells).tolist()
    cols = rng.integers(0, n_cols, size=n_cells).tolist()
    counts = rng.integers(1, 10, size=n_cells).tolist()
    cells = {}
    for i, j, c in zip(rows, cols, counts):
        key = (f"n{i}", f"n{j + shift}")
        cells[key] = cells.get(key, 0) + c
    return cells
