import numpy as np
import pytest

from socelas.census import neighbor_offsets


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def naive_census(data: np.ndarray, window: int) -> list[list[int]]:
    """Per-pixel recomputation of every comparison, as Python ints (0 outside the valid region)."""
    h, w = data.shape
    r = window // 2
    out = [[0] * w for _ in range(h)]
    offsets = neighbor_offsets(window)
    for v in range(r, h - r):
        for u in range(r, w - r):
            value = 0
            for dv, du in offsets:
                value = (value << 1) | int(data[v + dv, u + du] < data[v, u])
            out[v][u] = value
    return out


def points_from_grid(grid: np.ndarray) -> np.ndarray:
    """(u, v, d) rows for every non-negative entry of a disparity grid, row-major."""
    vs, us = np.nonzero(grid >= 0)
    return np.stack([us, vs, grid[vs, us]], axis=1).astype(np.int32)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
