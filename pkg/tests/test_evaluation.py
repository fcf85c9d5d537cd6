import numpy as np
import pytest
from PIL import Image

from socelas.errors import ShapeError
from socelas.evaluation import (
    SWEEP_COLUMNS,
    bad_pixels,
    evaluate_dataset,
    find_samples,
    kitti_error,
    rows_to_csv,
    sweep,
    sweep_configs,
)
from socelas.imageio import INVALID, DisparityMap, GroundTruth
from socelas.pipeline import PipelineConfig
from socelas.synthetic import shifted_ground_truth, shifted_pair


def one_pixel(est: int, gt: float):
    return DisparityMap(np.array([[est]], np.uint16), 256), GroundTruth(np.array([[round(gt * 256)]], np.uint16))


@pytest.mark.parametrize("gt,est,bad", [(10, 14, True), (100, 104, False), (10, 12, False)])
def test_metric_examples(gt, est, bad):
    rates = kitti_error(*one_pixel(est, gt))
    assert rates.bad_rate == (1.0 if bad else 0.0)
    assert rates.evaluated == 1


def test_threshold_edges():
    assert bad_pixels(np.array([13]), np.array([10.0])).tolist() == [True]  # exactly 3 px
    assert bad_pixels(np.array([63]), np.array([60.0])).tolist() == [True]  # exactly 5%
    assert bad_pixels(np.array([12]), np.array([9.01])).tolist() == [False]


def test_two_rates():
    est = DisparityMap(np.array([[10, INVALID, 20, 5]], np.uint16), 64)
    gt = GroundTruth(np.array([[10 * 256, 10 * 256, 0, 30 * 256]], np.uint16))
    rates = kitti_error(est, gt)
    assert rates.evaluated == 2 and rates.gt_valid == 3
    assert rates.bad_rate == 0.5  # 10 ok, 5 vs 30 bad
    assert rates.bad_rate_all == pytest.approx(2 / 3)  # the missing estimate counts as bad
    assert rates.density == 0.75


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        kitti_error(DisparityMap(np.zeros((2, 2), np.uint16), 4), GroundTruth(np.zeros((2, 3), np.uint16)))


def test_perturbation_increases_bad_count(rng):
    gt_d = rng.uniform(1, 120, (30, 30))
    gt = GroundTruth(np.round(gt_d * 256).astype(np.uint16))
    est = np.round(gt_d).astype(np.uint16)
    base = kitti_error(DisparityMap(est, 256), gt)
    moved = est.copy()
    moved[gt_d >= 60] += 10
    after = kitti_error(DisparityMap(moved, 256), gt)
    assert after.bad_rate * after.evaluated > base.bad_rate * base.evaluated


def make_dataset(root, n=3, w=72, h=48, layout=("image_0", "image_1")):
    for name in (*layout, "gt"):
        (root / name).mkdir(parents=True, exist_ok=True)
    for i in range(n):
        left, right = shifted_pair(w, h, 4 + i, seed=i)
        stem = f"{i:06d}_10"
        Image.fromarray(left.data).save(root / layout[0] / f"{stem}.png")
        Image.fromarray(right.data).save(root / layout[1] / f"{stem}.png")
        Image.fromarray(shifted_ground_truth(w, h, 4 + i).raw).save(root / "gt" / f"{stem}.png")
    return root


def test_find_samples_layouts(tmp_path):
    make_dataset(tmp_path / "a")
    make_dataset(tmp_path / "b", layout=("left", "right"))
    (tmp_path / "a" / "image_0" / "extra.png").write_bytes(b"")  # no right partner: ignored
    a = find_samples(tmp_path / "a", tmp_path / "a" / "gt")
    assert [s.name for s in a] == ["000000_10", "000001_10", "000002_10"]
    assert all(s.gt is not None for s in a)
    b = find_samples(tmp_path / "b")
    assert len(b) == 3 and b[0].gt is None
    with pytest.raises(FileNotFoundError):
        find_samples(tmp_path / "a" / "gt")


def test_evaluate_dataset(tmp_path):
    root = make_dataset(tmp_path)
    res = evaluate_dataset(root, root / "gt", PipelineConfig(disparity_range=16))
    assert res.n == 3 and not res.failures
    assert res.mean_error_pct < 5
    assert 0 < res.density <= 1
    assert res.support_points > 0
    s = res.summary()
    assert s["n_with_gt"] == 3 and "dense" in s["stage_ms"]


def test_failures_are_collected(tmp_path):
    root = make_dataset(tmp_path, n=2)
    (root / "image_0" / "000001_10.png").write_bytes(b"not a png")
    res = evaluate_dataset(root, root / "gt", PipelineConfig(disparity_range=16))
    assert res.n == 1
    assert [name for name, _ in res.failures] == ["000001_10"]


def test_sweep_is_deterministic_across_workers(tmp_path):
    root = make_dataset(tmp_path, n=2)
    samples = find_samples(root, root / "gt")
    configs = sweep_configs([5, 7], [3], [1, 8], PipelineConfig(disparity_range=16))
    assert len(configs) == 4
    a = sweep(samples, configs, workers=1)
    b = sweep(samples, configs, workers=2)
    strip = lambda rows: [{k: v for k, v in r.items() if k != "ms_per_frame"} for r in rows]  # noqa: E731
    assert strip(a) == strip(b)
    csv_text = rows_to_csv(a)
    lines = csv_text.splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert len(lines) == 5
    assert lines[1].startswith("5,3,1,")


def test_sweep_configs_skip_invalid():
    configs = sweep_configs([9], [5, 9], [8])
    assert [(c.sparse_window, c.dense_window, c.downsample) for c in configs] == [(9, 5, 8)]
