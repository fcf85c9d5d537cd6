"""Dense winner-take-all matching over per-pixel candidate sets, and the median post-filter."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .census import CensusField
from .errors import ConfigError, ShapeError
from .imageio import INVALID, DisparityMap
from .prior import PriorField, candidate_rows
from .sparse import NO_COST, cost_volume, right_winners

DENSE_WINDOWS = (3, 5, 7)

# largest |d_left - d_right| still accepted by the optional left-right check
LR_TOLERANCE = 1

_ROW_BLOCK = 16

CandidateSource = PriorField | np.ndarray | Callable[[int, int], int] | None


@dataclass(frozen=True)
class DenseConfig:
    window: int = 5
    disparity_range: int = 64
    median_radius: int = 0
    lr_check_dense: bool = False

    def __post_init__(self):
        if self.window not in DENSE_WINDOWS:
            raise ConfigError(f"dense window must be one of {DENSE_WINDOWS}, got {self.window}")
        if self.disparity_range < 2:
            raise ConfigError("disparity_range must be >= 2")
        if self.median_radius < 0:
            raise ConfigError("median_radius must be >= 0")


def _candidates_for_rows(candidates: CandidateSource, rows: slice, width: int, D: int) -> np.ndarray | None:
    if candidates is None:
        return None
    if isinstance(candidates, PriorField):
        return candidate_rows(candidates, rows)
    if isinstance(candidates, np.ndarray):
        return candidates[rows]
    out = np.zeros((rows.stop - rows.start, width, D), dtype=bool)
    for i, v in enumerate(range(rows.start, rows.stop)):
        for u in range(width):
            m = candidates(u, v)
            out[i, u] = [(m >> d) & 1 for d in range(D)]
    return out


def dense_match(
    left: CensusField, right: CensusField, candidates: CandidateSource, cfg: DenseConfig
) -> DisparityMap:
    """Per pixel, the cheapest candidate disparity whose right match is inside the valid region.

    ``candidates`` may be ``None`` (full range), a ``PriorField``, a boolean
    ``(h, w, D)`` array, or a callable ``(u, v) -> int bitmask``.
    """
    if left.words.shape != right.words.shape or left.window != right.window:
        raise ShapeError("left and right census fields differ")
    if left.window != cfg.window:
        raise ShapeError(f"census window {left.window} does not match dense window {cfg.window}")
    D = cfg.disparity_range
    h, w = left.height, left.width
    if isinstance(candidates, np.ndarray) and candidates.shape != (h, w, D):
        raise ShapeError(f"candidate array has shape {candidates.shape}, expected {(h, w, D)}")
    if isinstance(candidates, PriorField) and (candidates.plane.height, candidates.plane.width) != (h, w):
        raise ShapeError("prior does not match image dimensions")
    out = np.full((h, w), INVALID, dtype=np.uint16)
    for start in range(0, h, _ROW_BLOCK):
        rows = slice(start, min(start + _ROW_BLOCK, h))
        vol = cost_volume(left, right, D, rows)
        cand = _candidates_for_rows(candidates, rows, w, D)
        if cand is not None:
            vol = np.where(cand, vol, NO_COST)
        best = vol.argmin(axis=2)
        feasible = vol.min(axis=2) != NO_COST
        if cfg.lr_check_dense:
            rwin = right_winners(left, right, D, rows)
            vv, uu = np.nonzero(feasible)
            back = rwin[vv, uu - best[vv, uu]]
            feasible[vv, uu] = (back >= 0) & (np.abs(back - best[vv, uu]) <= LR_TOLERANCE)
        block = out[rows]
        block[feasible] = best[feasible]
    return DisparityMap(out, D)


def median_filter(dmap: DisparityMap, radius: int) -> DisparityMap:
    """Lower median of the valid disparities in each valid pixel's (2r+1)^2 neighborhood."""
    if radius < 1:
        return dmap
    data = dmap.data
    padded = np.pad(data, radius, mode="constant", constant_values=INVALID)
    k = 2 * radius + 1
    windows = np.lib.stride_tricks.sliding_window_view(padded, (k, k)).reshape(data.shape + (k * k,))
    ordered = np.sort(windows, axis=-1)
    n_valid = (ordered != INVALID).sum(axis=-1)
    idx = np.maximum(n_valid - 1, 0) // 2
    med = np.take_along_axis(ordered, idx[..., None], axis=-1)[..., 0]
    out = np.where(dmap.valid, med, INVALID).astype(np.uint16)
    return DisparityMap(out, dmap.disparity_range)
