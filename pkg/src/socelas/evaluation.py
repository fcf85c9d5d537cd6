"""KITTI-style error metric, dataset evaluation and configuration sweeps."""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ShapeError, SocElasError
from .imageio import DisparityMap, GrayImage, GroundTruth, load_gray, load_gt_png16
from .pipeline import PipelineConfig, run_pipeline

log = logging.getLogger(__name__)

ABS_THRESHOLD = 3.0
REL_THRESHOLD = 0.05

# (left, right) directory names tried in order
PAIR_LAYOUTS = (("image_0", "image_1"), ("left", "right"))
IMAGE_SUFFIXES = (".png", ".pgm", ".pnm")

SWEEP_COLUMNS = ("sparse_window", "dense_window", "downsample", "error_pct", "density", "ms_per_frame")


@dataclass(frozen=True)
class ErrorRates:
    """Bad-pixel rates of one disparity map against ground truth.

    ``bad_rate`` counts only pixels where both GT and estimate are valid;
    ``bad_rate_all`` counts every GT-valid pixel and treats a missing
    estimate as bad.
    """

    bad_rate: float
    bad_rate_all: float
    density: float
    evaluated: int
    gt_valid: int


def bad_pixels(est: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """Bad iff the error is at least 3 px absolute and at least 5% of the GT disparity."""
    err = np.abs(np.asarray(est, dtype=np.float64) - gt)
    return (err >= ABS_THRESHOLD) & (err >= REL_THRESHOLD * gt)


def kitti_error(est: DisparityMap, gt: GroundTruth) -> ErrorRates:
    if (est.width, est.height) != (gt.width, gt.height):
        raise ShapeError(f"estimate is {est.width}x{est.height}, ground truth is {gt.width}x{gt.height}")
    gt_valid = gt.valid
    both = gt_valid & est.valid
    bad = bad_pixels(est.data, gt.disparity) & both
    n_gt = int(gt_valid.sum())
    n_both = int(both.sum())
    n_bad = int(bad.sum())
    return ErrorRates(
        bad_rate=n_bad / n_both if n_both else 0.0,
        bad_rate_all=(n_bad + n_gt - n_both) / n_gt if n_gt else 0.0,
        density=est.density(),
        evaluated=n_both,
        gt_valid=n_gt,
    )


# -- datasets ------------------------------------------------------------------------


@dataclass(frozen=True)
class StereoSample:
    name: str
    left: Path
    right: Path
    gt: Path | None = None


def _images(directory: Path) -> dict[str, Path]:
    return {p.stem: p for p in sorted(directory.iterdir()) if p.suffix.lower() in IMAGE_SUFFIXES}


def find_samples(dataset: str | Path, gt_dir: str | Path | None = None) -> list[StereoSample]:
    """Pair up left/right images (``image_0``/``image_1`` or ``left``/``right``) by file stem.

    Ground truth, when given, is matched by the same stem; pairs without a
    GT file are still returned with ``gt=None``.
    """
    dataset = Path(dataset)
    for left_name, right_name in PAIR_LAYOUTS:
        if (dataset / left_name).is_dir() and (dataset / right_name).is_dir():
            lefts, rights = _images(dataset / left_name), _images(dataset / right_name)
            break
    else:
        raise FileNotFoundError(f"{dataset}: expected image_0/image_1 or left/right subdirectories")
    gts = _images(Path(gt_dir)) if gt_dir is not None else {}
    return [
        StereoSample(stem, lefts[stem], rights[stem], gts.get(stem))
        for stem in sorted(lefts)
        if stem in rights
    ]


# -- evaluation ----------------------------------------------------------------------


@dataclass(frozen=True)
class ImageEval:
    name: str
    rates: ErrorRates | None
    density: float
    support_points: int
    timings: dict[str, float]
    ms: float


@dataclass
class EvalResult:
    images: list[ImageEval]
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.images)

    def _with_gt(self) -> list[ErrorRates]:
        return [im.rates for im in self.images if im.rates is not None]

    @property
    def mean_error_pct(self) -> float:
        rates = self._with_gt()
        return 100.0 * float(np.mean([r.bad_rate for r in rates])) if rates else float("nan")

    @property
    def mean_error_all_pct(self) -> float:
        rates = self._with_gt()
        return 100.0 * float(np.mean([r.bad_rate_all for r in rates])) if rates else float("nan")

    @property
    def density(self) -> float:
        return float(np.mean([im.density for im in self.images])) if self.images else float("nan")

    @property
    def support_points(self) -> float:
        return float(np.mean([im.support_points for im in self.images])) if self.images else float("nan")

    @property
    def ms_per_frame(self) -> float:
        return float(np.mean([im.ms for im in self.images])) if self.images else float("nan")

    def stage_ms(self) -> dict[str, float]:
        totals: dict[str, list[float]] = {}
        for im in self.images:
            for k, v in im.timings.items():
                totals.setdefault(k, []).append(v)
        return {k: float(np.mean(v)) for k, v in totals.items()}

    def summary(self) -> dict:
        return {
            "n": self.n,
            "n_with_gt": len(self._with_gt()),
            "failures": len(self.failures),
            "mean_error_pct": self.mean_error_pct,
            "mean_error_all_pct": self.mean_error_all_pct,
            "density": self.density,
            "support_points": self.support_points,
            "ms_per_frame": self.ms_per_frame,
            "stage_ms": self.stage_ms(),
        }


def evaluate_pair(
    name: str, left: GrayImage, right: GrayImage, gt: GroundTruth | None, cfg: PipelineConfig
) -> ImageEval:
    t0 = time.perf_counter()
    result = run_pipeline(left, right, cfg)
    ms = 1000 * (time.perf_counter() - t0)
    rates = kitti_error(result.disparity, gt) if gt is not None else None
    return ImageEval(name, rates, result.disparity.density(), len(result.filtered), dict(result.timings), ms)


def _evaluate_sample(sample: StereoSample, cfg: PipelineConfig) -> ImageEval:
    gt = load_gt_png16(sample.gt) if sample.gt is not None else None
    return evaluate_pair(sample.name, load_gray(sample.left), load_gray(sample.right), gt, cfg)


def evaluate_samples(samples: Sequence[StereoSample], cfg: PipelineConfig, workers: int = 1) -> EvalResult:
    """Run every sample; failures are logged and collected, the rest continue.

    Results keep the sample order whatever the worker count.
    """

    def one(sample: StereoSample):
        try:
            return _evaluate_sample(sample, cfg)
        except (SocElasError, OSError, ValueError) as exc:
            log.warning("%s: %s", sample.name, exc)
            return (sample.name, str(exc))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, samples))
    else:
        outcomes = [one(s) for s in samples]
    result = EvalResult([o for o in outcomes if isinstance(o, ImageEval)])
    result.failures = [o for o in outcomes if isinstance(o, tuple)]
    return result


def evaluate_dataset(
    dataset: str | Path, gt_dir: str | Path | None, cfg: PipelineConfig, limit: int | None = None, workers: int = 1
) -> EvalResult:
    samples = find_samples(dataset, gt_dir)
    if limit is not None:
        samples = samples[:limit]
    return evaluate_samples(samples, cfg, workers)


# -- sweeps ----------------------------------------------------------------------------


def sweep_configs(
    windows: Iterable[int], dense: Iterable[int], downsample: Iterable[int], base: PipelineConfig | None = None
) -> list[PipelineConfig]:
    """Cartesian product of the swept axes over ``base``; invalid combinations are skipped."""
    base = base or PipelineConfig()
    configs = []
    for s in windows:
        for d in dense:
            for f in downsample:
                try:
                    configs.append(base.with_(sparse_window=s, dense_window=d, downsample=f))
                except SocElasError as exc:
                    log.warning("skipping %dx%d/%dx%d 1/%d: %s", s, s, d, d, f, exc)
    return configs


def sweep(
    samples: Sequence[StereoSample], configs: Sequence[PipelineConfig], workers: int = 1
) -> list[dict]:
    rows = []
    for cfg in configs:
        res = evaluate_samples(samples, cfg, workers)
        rows.append(
            {
                "sparse_window": cfg.sparse_window,
                "dense_window": cfg.dense_window,
                "downsample": cfg.downsample,
                "error_pct": res.mean_error_pct,
                "density": res.density,
                "ms_per_frame": res.ms_per_frame,
            }
        )
    return rows


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] = SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.4f}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
