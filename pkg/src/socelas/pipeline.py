"""End-to-end configuration and the batch (whole-frame, vectorized) executor."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .census import CensusConfig, CensusField, census_transform
from .dense import DenseConfig, dense_match, median_filter
from .errors import ConfigError, ShapeError
from .filters import FilterConfig, consistency_filter, redundancy_filter_backwards
from .imageio import DisparityMap, GrayImage
from .prior import PriorField, build_prior
from .sparse import SparseConfig, downsample_support, match_support

log = logging.getLogger(__name__)

EXECUTORS = ("batch", "stream")

CONFIG_DOCS = {
    "sparse_window": "census window for support matching (3, 5, 7, 9, 11 or 13)",
    "dense_window": "census window for dense matching (3, 5 or 7)",
    "disparity_range": "number of disparities D searched, 0 .. D-1",
    "lr_check": "keep a support point only if the right-to-left winner agrees exactly",
    "downsample": "support point fraction kept on a regular lattice (1, 2, 4, 8, 16 or 32; '1/8' also accepted)",
    "consistency_window": "half-size of the square consistency window, in pixels",
    "consistency_tolerance": "max |delta d| for a neighbor to count as consistent",
    "min_consistent_neighbors": "neighbors needed for a support point to survive",
    "redundancy_distance": "row/column reach of the redundancy filter, in pixels",
    "redundancy_tolerance": "max |delta d| for an earlier kept point to make a point redundant",
    "grid_size": "side of a grid-vector cell, in pixels",
    "grid_neighborhood": "pool support points from the 3x3 cell neighborhood into each cell",
    "median_radius": "radius of the median post-filter (0 disables it)",
    "lr_check_dense": "invalidate dense pixels whose right-to-left winner differs by more than 1",
    "executor": "batch (vectorized whole frame) or stream (pixel-stream stage model)",
    "frames_in_flight": "independent pipeline instances for frame sequences (1 or 2)",
    "stage_depth": "output register depth of every stream stage, in steps",
}


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the pipeline, flat so it maps 1:1 onto ``key=value`` files."""

    sparse_window: int = 9
    dense_window: int = 5
    disparity_range: int = 64
    lr_check: bool = False
    downsample: int = 1
    consistency_window: int = 10
    consistency_tolerance: int = 5
    min_consistent_neighbors: int = 2
    redundancy_distance: int = 5
    redundancy_tolerance: int = 1
    grid_size: int = 20
    grid_neighborhood: bool = True
    median_radius: int = 0
    lr_check_dense: bool = False
    executor: str = "batch"
    frames_in_flight: int = 1
    stage_depth: int = 1

    def __post_init__(self):
        # building the sub-configs runs their validation
        self.census_sparse
        self.census_dense
        self.sparse
        self.filter
        self.dense
        if self.grid_size < 1:
            raise ConfigError("grid_size must be >= 1")
        if self.executor not in EXECUTORS:
            raise ConfigError(f"executor must be one of {EXECUTORS}")
        if self.frames_in_flight not in (1, 2):
            raise ConfigError("frames_in_flight must be 1 or 2")
        if self.stage_depth < 0:
            raise ConfigError("stage_depth must be >= 0")

    @property
    def census_sparse(self) -> CensusConfig:
        return CensusConfig(self.sparse_window)

    @property
    def census_dense(self) -> CensusConfig:
        return CensusConfig(self.dense_window)

    @property
    def sparse(self) -> SparseConfig:
        return SparseConfig(self.disparity_range, self.lr_check, self.downsample)

    @property
    def filter(self) -> FilterConfig:
        return FilterConfig(
            self.consistency_window,
            self.consistency_tolerance,
            self.min_consistent_neighbors,
            self.redundancy_distance,
            self.redundancy_tolerance,
        )

    @property
    def dense(self) -> DenseConfig:
        return DenseConfig(self.dense_window, self.disparity_range, self.median_radius, self.lr_check_dense)

    def with_(self, **changes) -> "PipelineConfig":
        return replace(self, **changes)

    # -- key=value files ------------------------------------------------------

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> "PipelineConfig":
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            key = key.strip().replace("-", "_")
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _parse_value(key, types[key], str(raw).strip())
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> "PipelineConfig":
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
        return cls.from_mapping(values)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_text(Path(path).read_text())

    def to_text(self, documented: bool = False) -> str:
        lines = []
        for key, value in asdict(self).items():
            if isinstance(value, bool):
                value = str(value).lower()
            if documented:
                lines.append(f"# {CONFIG_DOCS[key]}")
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def _parse_value(key: str, typ, raw: str):
    typ = typ if isinstance(typ, str) else typ.__name__
    if typ == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if typ == "int":
        if key == "downsample" and raw.startswith("1/"):
            raw = raw[2:]
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    return raw


@dataclass
class PipelineResult:
    """Every intermediate product ("tap") of one frame, plus per-stage wall time in ms."""

    census_left: CensusField
    census_right: CensusField
    filtered: np.ndarray
    prior: PriorField
    disparity: DisparityMap
    dense_left: CensusField | None = None
    dense_right: CensusField | None = None
    support: np.ndarray | None = None
    degenerate: bool = False
    timings: dict[str, float] = field(default_factory=dict)
    steps: dict[str, int] = field(default_factory=dict)


class StageTimer:
    """Accumulates wall time per named stage, in milliseconds."""

    def __init__(self):
        self.ms: dict[str, float] = {}

    @contextmanager
    def __call__(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.ms[name] = self.ms.get(name, 0.0) + 1000 * (time.perf_counter() - t0)


def check_pair(left: GrayImage, right: GrayImage) -> None:
    if (left.width, left.height) != (right.width, right.height):
        raise ShapeError(f"left is {left.width}x{left.height}, right is {right.width}x{right.height}")


def sequential_stages(filtered: np.ndarray, cfg: PipelineConfig, width: int, height: int) -> tuple[PriorField, bool]:
    """The single-threaded middle of the pipeline: grid vectors, mesh, prior matrix.

    Both executors call this same function, so their priors agree by construction.
    """
    prior, degenerate = build_prior(
        filtered, cfg.disparity_range, cfg.grid_size, width, height, cfg.grid_neighborhood
    )
    if degenerate:
        log.warning("support points do not span a triangle; dense matching uses grid vectors only")
    return prior, degenerate


def run_batch(left: GrayImage, right: GrayImage, cfg: PipelineConfig) -> PipelineResult:
    check_pair(left, right)
    timer = StageTimer()
    with timer("census"):
        cl = census_transform(left, cfg.census_sparse)
        cr = census_transform(right, cfg.census_sparse)
    with timer("sparse"):
        support = downsample_support(match_support(cl, cr, cfg.sparse), cfg.downsample)
    with timer("filter"):
        kept = consistency_filter(support, cfg.filter, shape=(left.height, left.width))
        filtered = redundancy_filter_backwards(kept, cfg.filter)
    with timer("prior"):
        prior, degenerate = sequential_stages(filtered, cfg, left.width, left.height)
    with timer("dense"):
        if cfg.dense_window == cfg.sparse_window:
            dl, dr = cl, cr
        else:
            dl = census_transform(left, cfg.census_dense)
            dr = census_transform(right, cfg.census_dense)
        disparity = dense_match(dl, dr, prior, cfg.dense)
    if cfg.median_radius > 0:
        with timer("median"):
            disparity = median_filter(disparity, cfg.median_radius)
    return PipelineResult(
        census_left=cl,
        census_right=cr,
        filtered=filtered,
        prior=prior,
        disparity=disparity,
        dense_left=dl,
        dense_right=dr,
        support=support,
        degenerate=degenerate,
        timings=timer.ms,
    )


def run_pipeline(left: GrayImage, right: GrayImage, cfg: PipelineConfig) -> PipelineResult:
    """Run one frame under ``cfg.executor``."""
    if cfg.executor == "stream":
        from .stream.executor import run_streaming_pipeline

        return run_streaming_pipeline(left, right, cfg)
    return run_batch(left, right, cfg)
