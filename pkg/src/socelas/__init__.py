"""Software stereo-disparity engine built on census support points and a plane prior.

Two executors share every algorithmic stage: a vectorized whole-frame batch
executor and a pixel-stream executor that models line buffers, window
registers and bounded channels, and reports step counts.
"""

from .census import CensusConfig, CensusField, census_transform, hamming
from .dense import DenseConfig, dense_match, median_filter
from .errors import (
    ConfigError,
    DegenerateInput,
    FormatError,
    InputTooSmall,
    MalformedHeader,
    ParseError,
    ShapeError,
    SocElasError,
    Truncated,
    UnsupportedDepth,
    WriteError,
)
from .evaluation import EvalResult, ErrorRates, kitti_error, sweep
from .filters import FilterConfig, consistency_filter, redundancy_filter_backwards
from .imageio import (
    INVALID,
    DisparityMap,
    GrayImage,
    GroundTruth,
    load_gray,
    load_gt_png16,
    load_pgm,
    save_disparity,
)
from .pipeline import PipelineConfig, PipelineResult, run_batch, run_pipeline
from .prior import candidate_set, build_grid_vectors, delaunay, rasterize_prior
from .sparse import SparseConfig, SupportPoint, downsample_support, match_support, shift_sum_threshold

__version__ = "0.1.0"
