"""Step-count model of the streaming executor.

One step moves one pixel through every stream stage. A stage's fill latency
is its buffer lookahead (``radius`` rows plus ``radius`` pixels for a
window stage, ``D - 1`` pixels for a left-right check) plus the register
depth. After fill, each stage emits one item per step, so a frame costs
``width * height`` steps plus the summed fill of its stage group.
"""

from __future__ import annotations

from ..pipeline import PipelineConfig


def stage_latencies(cfg: PipelineConfig, width: int) -> list[tuple[str, str, int]]:
    """(group, stage, fill latency in steps) for every stream stage, in pipeline order."""
    depth = cfg.stage_depth
    rs, rd = cfg.sparse_window // 2, cfg.dense_window // 2
    rc = cfg.consistency_window
    D = cfg.disparity_range
    stages = [
        ("extract", "census", rs * width + rs + depth),
        ("extract", "sparse_match", (D - 1 if cfg.lr_check else 0) + depth),
        ("extract", "consistency", rc * width + rc + depth),
        ("extract", "redundancy", depth),
        ("dense", "census_dense", rd * width + rd + depth),
        ("dense", "dense_match", (D - 1 if cfg.lr_check_dense else 0) + depth),
    ]
    if cfg.median_radius > 0:
        rm = cfg.median_radius
        stages.append(("dense", "median", rm * width + rm + depth))
    return stages


def group_fill(cfg: PipelineConfig, width: int) -> dict[str, int]:
    fill: dict[str, int] = {}
    for group, _, latency in stage_latencies(cfg, width):
        fill[group] = fill.get(group, 0) + latency
    return fill


def report_cycle_model(cfg: PipelineConfig, width: int, height: int) -> list[dict]:
    """Per-stage rows plus one total row per stage group.

    ``steps_per_frame`` is the throughput term (one pixel per step) and does
    not depend on windows or disparity range; fill is reported separately.
    """
    pixels = width * height
    rows = [
        {"stage": stage, "group": group, "fill_latency_steps": latency, "steps_per_frame": pixels}
        for group, stage, latency in stage_latencies(cfg, width)
    ]
    for group, fill in group_fill(cfg, width).items():
        rows.append(
            {
                "stage": f"{group}_total",
                "group": group,
                "fill_latency_steps": fill,
                "steps_per_frame": pixels,
                "total_steps": pixels + fill,
            }
        )
    return rows


def frame_steps(cfg: PipelineConfig, width: int, height: int) -> int:
    """Steps spent in stream groups for one frame, fill included."""
    return sum(width * height + fill for fill in group_fill(cfg, width).values())


def resolution_ratio(cfg: PipelineConfig, size_a: tuple[int, int], size_b: tuple[int, int]) -> dict[str, float]:
    """Predicted step ratio between two frame sizes, with and without fill."""
    (wa, ha), (wb, hb) = size_a, size_b
    return {
        "steps_per_frame_ratio": (wa * ha) / (wb * hb),
        "total_steps_ratio": frame_steps(cfg, wa, ha) / frame_steps(cfg, wb, hb),
    }
