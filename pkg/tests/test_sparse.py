import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from socelas.census import CensusConfig, census_transform, hamming
from socelas.errors import ConfigError, ShapeError
from socelas.imageio import GrayImage
from socelas.sparse import (
    SparseConfig,
    accept,
    ambiguity_scores,
    downsample_support,
    match_support,
    shift_sum_threshold,
    shift_sum_threshold_array,
    to_support_points,
)
from socelas.synthetic import shifted_pair


@pytest.mark.parametrize("m2,expected", [(0, 0), (32, 29), (64, 58), (1, 0), (31, 25)])
def test_shift_sum_values(m2, expected):
    assert shift_sum_threshold(m2) == expected


@given(st.integers(0, 1 << 20))
def test_shift_sum_is_sum_of_floors_and_below_m2(m2):
    t = shift_sum_threshold(m2)
    assert t == m2 // 2 + m2 // 4 + m2 // 8 + m2 // 32
    assert t <= m2
    # four floors can lose at most 1/2 + 3/4 + 7/8 + 31/32 of a unit
    assert 0.90625 * m2 - 3.09375 <= t <= 0.90625 * m2


def test_shift_sum_array_matches_scalar():
    m2 = np.arange(0, 5000)
    assert shift_sum_threshold_array(m2).tolist() == [shift_sum_threshold(int(x)) for x in m2]


def test_scores_exclude_adjacent_disparities():
    s = ambiguity_scores([10, 2, 3, 9, 20])
    assert s == (2, 9, 1)  # d=0 and d=2 are adjacent to the winner


def test_ties_go_to_smaller_disparity():
    assert ambiguity_scores([5, 9, 9, 5, 9]).d_best == 0


def test_single_candidate_is_undefined():
    assert ambiguity_scores([3]) is None
    assert ambiguity_scores([3, 4]) is None  # only an adjacent alternative
    assert not accept(None)


def test_flat_costs_rejected():
    assert not accept(ambiguity_scores([0, 0, 0, 0]))


def test_accept_rule():
    assert accept(ambiguity_scores([29, 50, 50, 32]))
    assert not accept(ambiguity_scores([30, 50, 50, 32]))


def _match(left, right, **kw):
    cfg = CensusConfig(kw.pop("window", 9))
    return match_support(census_transform(left, cfg), census_transform(right, cfg), SparseConfig(**kw))


def test_shifted_pair_support_is_the_shift():
    left, right = shifted_pair(64, 48, 7, seed=3)
    pts = _match(left, right, disparity_range=32)
    assert len(pts) > 0
    # jointly valid region: the true match must be inside the right image's valid area
    inside = pts[:, 0] - 7 >= 4
    assert (pts[inside, 2] == 7).all()
    assert inside.mean() > 0.8


def test_constant_images_give_no_support():
    flat = GrayImage(np.full((32, 32), 77, dtype=np.uint8))
    assert len(_match(flat, flat, disparity_range=16)) == 0


def test_left_border_pixels_rejected():
    left, right = shifted_pair(48, 32, 3, seed=1)
    pts = _match(left, right, disparity_range=16)
    # at u = r + 1 only d in {0, 1} is evaluable, both adjacent, so m2 is undefined
    assert not (pts[:, 0] <= 5).any()


def test_matches_bruteforce_oracle(rng):
    data = rng.integers(0, 256, (20, 40), dtype=np.uint8)
    other = np.roll(data, -3, axis=1)
    other[:, -3:] = rng.integers(0, 256, (20, 3))
    left, right = GrayImage(data), GrayImage(other)
    cfg = CensusConfig(5)
    cl, cr = census_transform(left, cfg), census_transform(right, cfg)
    D, r = 12, 2
    expected = []
    for v in range(r, 20 - r):
        for u in range(r, 40 - r):
            costs = [hamming(cl.descriptor(u, v), cr.descriptor(u - d, v)) for d in range(min(D - 1, u - r) + 1)]
            s = ambiguity_scores(costs)
            if accept(s):
                expected.append((u, v, s.d_best))
    got = match_support(cl, cr, SparseConfig(D))
    assert [tuple(p) for p in got.tolist()] == expected


def test_points_are_row_major_and_in_range():
    left, right = shifted_pair(50, 40, 5, seed=8)
    pts = _match(left, right, disparity_range=20)
    keys = pts[:, 1] * 50 + pts[:, 0]
    assert (np.diff(keys) > 0).all()
    assert ((pts[:, 2] >= 0) & (pts[:, 2] < 20)).all()
    assert to_support_points(pts[:1])[0].d == pts[0, 2]


def test_lr_check_gives_subset():
    left, right = shifted_pair(64, 40, 6, seed=2)
    plain = {tuple(p) for p in _match(left, right, disparity_range=24).tolist()}
    checked = {tuple(p) for p in _match(left, right, disparity_range=24, lr_check=True).tolist()}
    assert checked <= plain
    assert checked


def test_shape_mismatch():
    a = census_transform(GrayImage(np.zeros((10, 10), np.uint8)), CensusConfig(3))
    b = census_transform(GrayImage(np.zeros((10, 12), np.uint8)), CensusConfig(3))
    with pytest.raises(ShapeError):
        match_support(a, b, SparseConfig(4))


def _full_grid(w, h):
    vv, uu = np.mgrid[0:h, 0:w]
    return np.stack([uu.ravel(), vv.ravel(), np.zeros(w * h, int)], axis=1).astype(np.int32)


def test_downsample_identity():
    pts = _full_grid(10, 7)
    assert np.array_equal(downsample_support(pts, 1), pts)


def test_downsample_quarter_keeps_even_even():
    pts = _full_grid(10, 7)
    kept = downsample_support(pts, 4)
    assert ((kept[:, 0] % 2 == 0) & (kept[:, 1] % 2 == 0)).all()
    assert len(kept) == 5 * 4


@pytest.mark.parametrize("fraction", [2, 8, 16, 32])
def test_downsample_counts(fraction):
    w, h = 64, 48
    kept = downsample_support(_full_grid(w, h), fraction)
    assert abs(len(kept) - w * h / fraction) <= max(w, h)


def test_downsample_rejects_unknown_fraction():
    with pytest.raises(ConfigError):
        downsample_support(_full_grid(4, 4), 3)
    with pytest.raises(ConfigError):
        SparseConfig(downsample=5)
