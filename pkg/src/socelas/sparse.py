"""Support point extraction: winner-take-all census matching plus the ambiguity test.

A left pixel is accepted when its best cost ``m1`` satisfies
``m1 <= shift_sum_threshold(m2)``, where ``m2`` is the best cost among
disparities more than one level away from the winner. Perfectly flat
matches (``m1 == m2 == 0``) are rejected.

Support points travel as ``(N, 3)`` int32 arrays with columns ``u, v, d``,
sorted row-major.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .census import CensusField, hamming_words
from .errors import ConfigError, ShapeError

DOWNSAMPLE_STRIDES = {1: (1, 1), 2: (2, 1), 4: (2, 2), 8: (4, 2), 16: (4, 4), 32: (8, 4)}

NO_COST = np.iinfo(np.uint16).max

# rows of the cost volume evaluated at once
_ROW_BLOCK = 32


class SupportPoint(NamedTuple):
    u: int
    v: int
    d: int


class AmbiguityScores(NamedTuple):
    m1: int
    m2: int
    d_best: int


@dataclass(frozen=True)
class SparseConfig:
    disparity_range: int = 64
    lr_check: bool = False
    downsample: int = 1  # keep 1/downsample of the points

    def __post_init__(self):
        if self.disparity_range < 2:
            raise ConfigError("disparity_range must be >= 2")
        if self.downsample not in DOWNSAMPLE_STRIDES:
            raise ConfigError(f"downsample must be one of {sorted(DOWNSAMPLE_STRIDES)}")


def empty_points() -> np.ndarray:
    return np.zeros((0, 3), dtype=np.int32)


def as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.int32)
    return arr.reshape(-1, 3) if arr.size else empty_points()


def to_support_points(points: np.ndarray) -> list[SupportPoint]:
    return [SupportPoint(*row) for row in points.tolist()]


def shift_sum_threshold(m2: int) -> int:
    return (m2 >> 1) + (m2 >> 2) + (m2 >> 3) + (m2 >> 5)


def shift_sum_threshold_array(m2: np.ndarray) -> np.ndarray:
    m2 = m2.astype(np.int32)
    return (m2 >> 1) + (m2 >> 2) + (m2 >> 3) + (m2 >> 5)


def ambiguity_scores(costs) -> AmbiguityScores | None:
    """Scores for one pixel given costs indexed by disparity; ``None`` when m2 is undefined."""
    costs = list(costs)
    if len(costs) < 2:
        return None
    m1 = min(costs)
    d_best = costs.index(m1)
    others = [c for d, c in enumerate(costs) if abs(d - d_best) > 1]
    if not others:
        return None
    return AmbiguityScores(m1, min(others), d_best)


def accept(scores: AmbiguityScores | None) -> bool:
    if scores is None:
        return False
    if scores.m1 == 0 and scores.m2 == 0:
        return False
    return scores.m1 <= shift_sum_threshold(scores.m2)


def cost_volume(left: CensusField, right: CensusField, disparity_range: int, rows: slice | None = None) -> np.ndarray:
    """Costs ``[v, u, d]`` of left (u, v) against right (u - d, v).

    Entries where the left pixel or its right match lies outside the valid
    census region are ``NO_COST``.
    """
    r = left.window // 2
    rows = rows if rows is not None else slice(0, left.height)
    lw = left.words[rows]
    rw = right.words[rows]
    nrows, width = lw.shape[:2]
    vol = np.full((nrows, width, disparity_range), NO_COST, dtype=np.uint16)
    v_idx = np.arange(rows.start, rows.start + nrows)
    row_ok = (v_idx >= r) & (v_idx < left.height - r)
    hi = width - r
    for d in range(disparity_range):
        lo = r + d
        if lo >= hi:
            break
        vol[:, lo:hi, d] = hamming_words(lw[:, lo:hi], rw[:, lo - d : hi - d])
    vol[~row_ok] = NO_COST
    return vol


def right_winners(left: CensusField, right: CensusField, disparity_range: int, rows: slice) -> np.ndarray:
    """Winner-take-all disparity for each right pixel x, matched against left (x + d).

    Returns -1 where no candidate is feasible.
    """
    r = left.window // 2
    lw = left.words[rows]
    rw = right.words[rows]
    nrows, width = lw.shape[:2]
    vol = np.full((nrows, width, disparity_range), NO_COST, dtype=np.uint16)
    hi = width - r
    for d in range(disparity_range):
        if r + d >= hi:
            break
        # right x in [r, hi - d) pairs with left x + d in [r + d, hi)
        vol[:, r : hi - d, d] = hamming_words(rw[:, r : hi - d], lw[:, r + d : hi])
    out = vol.argmin(axis=2).astype(np.int32)
    out[vol.min(axis=2) == NO_COST] = -1
    return out


def _check_pair(left: CensusField, right: CensusField) -> None:
    if left.words.shape != right.words.shape or left.window != right.window:
        raise ShapeError(
            f"census fields differ: {left.words.shape}/W{left.window} vs {right.words.shape}/W{right.window}"
        )


def match_support(left: CensusField, right: CensusField, cfg: SparseConfig) -> np.ndarray:
    """Every unambiguous left pixel as ``(u, v, d)``, row-major, before downsampling."""
    _check_pair(left, right)
    D = cfg.disparity_range
    d_axis = np.arange(D)
    found = []
    for start in range(0, left.height, _ROW_BLOCK):
        rows = slice(start, min(start + _ROW_BLOCK, left.height))
        vol = cost_volume(left, right, D, rows)
        d_best = vol.argmin(axis=2)
        m1 = np.take_along_axis(vol, d_best[..., None], axis=2)[..., 0].astype(np.int32)
        near = np.abs(d_axis[None, None, :] - d_best[..., None]) <= 1
        m2 = np.where(near, NO_COST, vol).min(axis=2).astype(np.int32)
        ok = (m1 != NO_COST) & (m2 != NO_COST)
        ok &= m1 <= shift_sum_threshold_array(m2)
        ok &= ~((m1 == 0) & (m2 == 0))
        if cfg.lr_check:
            rwin = right_winners(left, right, D, rows)
            vv, uu = np.nonzero(ok)
            back = rwin[vv, uu - d_best[vv, uu]]
            ok[vv, uu] = back == d_best[vv, uu]
        vv, uu = np.nonzero(ok)
        found.append(np.stack([uu, vv + start, d_best[vv, uu]], axis=1))
    if not found:
        return empty_points()
    return np.concatenate(found).astype(np.int32)


def downsample_support(points: np.ndarray, fraction: int) -> np.ndarray:
    """Keep points on a ``(s_u, s_v)`` lattice; ``fraction`` is the denominator (8 means 1/8)."""
    if fraction not in DOWNSAMPLE_STRIDES:
        raise ConfigError(f"downsample must be one of {sorted(DOWNSAMPLE_STRIDES)}")
    su, sv = DOWNSAMPLE_STRIDES[fraction]
    points = as_points(points)
    keep = (points[:, 0] % su == 0) & (points[:, 1] % sv == 0)
    return points[keep]


def keeps_downsampled(u: int, v: int, fraction: int) -> bool:
    su, sv = DOWNSAMPLE_STRIDES[fraction]
    return u % su == 0 and v % sv == 0
