"""Support point filtering.

Two passes, applied in this order by the pipeline:

* ``consistency_filter`` drops points with fewer than ``k`` neighbors of
  similar disparity inside a square window (symmetric in space).
* ``redundancy_filter_backwards`` drops points that repeat an already kept
  point on the same row or column. Only earlier points in raster order are
  consulted, so any prefix of the stream filters to a prefix of the result.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .sparse import as_points


@dataclass(frozen=True)
class FilterConfig:
    consistency_window: int = 10
    consistency_tolerance: int = 5
    min_consistent_neighbors: int = 2
    redundancy_distance: int = 5
    redundancy_tolerance: int = 1

    def __post_init__(self):
        for name, value in vars(self).items():
            if value < 0:
                raise ConfigError(f"{name} must be >= 0")


def consistency_filter(points, cfg: FilterConfig, shape: tuple[int, int] | None = None) -> np.ndarray:
    points = as_points(points)
    if len(points) == 0:
        return points
    R, tol, k = cfg.consistency_window, cfg.consistency_tolerance, cfg.min_consistent_neighbors
    if shape is None:
        shape = (int(points[:, 1].max()) + 1, int(points[:, 0].max()) + 1)
    grid = np.full(shape, -1, dtype=np.int32)
    grid[points[:, 1], points[:, 0]] = points[:, 2]
    h, w = shape
    us, vs, ds = points[:, 0], points[:, 1], points[:, 2]
    v0, v1 = np.maximum(vs - R, 0), np.minimum(vs + R + 1, h)
    u0, u1 = np.maximum(us - R, 0), np.minimum(us + R + 1, w)
    support = np.zeros(len(points), dtype=np.int64)
    # one summed-area table of "similar disparity" per distinct d
    for d in np.unique(ds).tolist():
        sel = np.flatnonzero(ds == d)
        similar = (grid >= 0) & (np.abs(grid - d) <= tol)
        sat = np.zeros((h + 1, w + 1), dtype=np.int64)
        sat[1:, 1:] = similar.cumsum(axis=0).cumsum(axis=1)
        a, b, c, e = v0[sel], v1[sel], u0[sel], u1[sel]
        support[sel] = sat[b, e] - sat[a, e] - sat[b, c] + sat[a, c] - 1
    return points[support >= k]


class BackwardRedundancy:
    """Incremental form of the backwards-only redundancy rule.

    Feed points in raster order with :meth:`offer`; it returns whether the
    point is kept. State is limited to kept points on the current row and
    the last ``redundancy_distance`` rows of each column.
    """

    def __init__(self, cfg: FilterConfig):
        self.dist = cfg.redundancy_distance
        self.tol = cfg.redundancy_tolerance
        self._row = -1
        self._row_kept: deque[tuple[int, int]] = deque()
        self._col_kept: dict[int, deque[tuple[int, int]]] = {}

    def offer(self, u: int, v: int, d: int) -> bool:
        if v != self._row:
            self._row = v
            self._row_kept.clear()
        while self._row_kept and u - self._row_kept[0][0] > self.dist:
            self._row_kept.popleft()
        for _, dq in self._row_kept:
            if abs(d - dq) <= self.tol:
                return False
        col = self._col_kept.get(u)
        if col is not None:
            while col and v - col[0][0] > self.dist:
                col.popleft()
            for _, dq in col:
                if abs(d - dq) <= self.tol:
                    return False
        self._row_kept.append((u, d))
        self._col_kept.setdefault(u, deque()).append((v, d))
        return True


def redundancy_filter_backwards(points, cfg: FilterConfig) -> np.ndarray:
    points = as_points(points)
    state = BackwardRedundancy(cfg)
    keep = [state.offer(u, v, d) for u, v, d in points.tolist()]
    return points[np.array(keep, dtype=bool)] if keep else points


def redundancy_filter_bidirectional(points, cfg: FilterConfig) -> np.ndarray:
    """Drop any point that has a look-alike anywhere on its row or column, earlier or later.

    Kept only as a reference for comparing against the backwards rule; a run
    of equal disparities disappears entirely under this rule.
    """
    points = as_points(points)
    R, tol = cfg.redundancy_distance, cfg.redundancy_tolerance
    keep = []
    rows = points.tolist()
    for i, (u, v, d) in enumerate(rows):
        redundant = False
        for j, (uq, vq, dq) in enumerate(rows):
            if i == j or abs(d - dq) > tol:
                continue
            if (vq == v and abs(u - uq) <= R) or (uq == u and abs(v - vq) <= R):
                redundant = True
                break
        keep.append(not redundant)
    return points[np.array(keep, dtype=bool)] if keep else points


def filter_support(points, cfg: FilterConfig, shape: tuple[int, int] | None = None) -> np.ndarray:
    return redundancy_filter_backwards(consistency_filter(points, cfg, shape), cfg)
