"""Streaming executor.

The frame is processed in three groups, mirroring the accelerator/CPU split:

1. ``extract`` (stream): census L/R -> support matching (+ downsampling)
   -> consistency -> backwards redundancy. One pixel enters per step.
2. sequential: grid vectors, Delaunay mesh, prior rasterization, one-hot
   encoding. Single-threaded, whole frame.
3. ``dense`` (stream): dense census L/R -> restricted matching -> median.

Hand-offs between groups are full-frame buffers. Inside a group, stages
are wired by bounded channels and advance in lockstep.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..census import CensusConfig, CensusField, int_to_words
from ..dense import LR_TOLERANCE
from ..errors import InputTooSmall
from ..imageio import DisparityMap, GrayImage
from ..pipeline import PipelineConfig, PipelineResult, StageTimer, check_pair, sequential_stages
from ..prior import CandidateProvider
from .buffers import Channel
from .stages import (
    NO_POINT,
    CensusStage,
    ConsistencyStage,
    DenseMatchStage,
    MedianStage,
    RedundancyStage,
    SparseMatchStage,
    StreamStage,
)

CHANNEL_CAPACITY = 2


@dataclass
class GroupRun:
    """Outputs and accounting of one lockstep stage group."""

    outputs: list
    steps: int
    stages: list[StreamStage]
    channels: list[Channel]
    head_outputs: list[list] = field(default_factory=list)

    @property
    def fill_latency(self) -> int:
        return self.steps - len(self.outputs)

    def check_contracts(self, max_rows: dict[str, int] | None = None) -> None:
        """Raise if any stage broke the one-item-per-step or buffer-size contract."""
        for stage in self.stages:
            if stage.emitted != stage.n or not stage.contiguous:
                raise AssertionError(f"{stage.name}: emitted {stage.emitted}/{stage.n}, contiguous={stage.contiguous}")
            bank = getattr(stage, "bank", None)
            if bank is not None and max_rows and stage.name in max_rows:
                if bank.resident_rows > max_rows[stage.name]:
                    raise AssertionError(f"{stage.name}: {bank.resident_rows} resident rows > {max_rows[stage.name]}")
        for ch in self.channels:
            if ch.peak > ch.capacity:
                raise AssertionError(f"channel {ch.name} peaked at {ch.peak}")


def run_group(
    sources: Sequence[Sequence],
    heads: Sequence[StreamStage],
    tail: Sequence[StreamStage],
    n: int,
    record_heads: bool = False,
) -> GroupRun:
    """Clock ``heads`` (one per source, in parallel) and then ``tail`` in series until n results leave."""
    channels = [Channel(f"{heads[0].name}->{tail[0].name}", CHANNEL_CAPACITY)]
    channels += [Channel(f"{a.name}->{b.name}", CHANNEL_CAPACITY) for a, b in zip(tail, tail[1:])]
    head_out: list[list] = [[] for _ in heads]
    outputs: list = []
    t = 0
    while len(outputs) < n:
        ins = [src[t] if t < n else None for src in sources]
        hs = [h.step(x) for h, x in zip(heads, ins)]
        if hs[0] is None:
            if any(o is not None for o in hs):
                raise AssertionError("parallel head stages lost lockstep")
            x = None
        else:
            x = tuple(hs) if len(hs) > 1 else hs[0]
            if record_heads:
                for store, o in zip(head_out, hs):
                    store.append(o)
        for ch, stage in zip(channels, tail):
            if x is not None:
                ch.put(x)
            x = stage.step(ch.get())
        if x is not None:
            outputs.append(x)
        t += 1
    return GroupRun(outputs, t, [*heads, *tail], channels, head_out)


@dataclass
class CensusStream:
    descriptors: list[int]
    first_output_step: int
    steps: int
    stage: CensusStage


def stream_census(img: GrayImage, cfg: CensusConfig, depth: int = 1) -> CensusStream:
    """Census over a raster pixel stream; one descriptor per pixel (zero outside the valid region)."""
    stage = CensusStage(img.width, img.height, cfg.window, depth)
    pixels = img.pixels.tolist()
    n = len(pixels)
    out: list[int] = []
    t = 0
    while len(out) < n:
        o = stage.step(pixels[t] if t < n else None)
        if o is not None:
            out.append(o)
        t += 1
    return CensusStream(out, stage.first_emit, t, stage)


def descriptors_to_field(descriptors: Sequence[int], width: int, height: int, window: int) -> CensusField:
    n_words = (window * window - 1 + 63) // 64
    if n_words == 1:
        words = np.array(descriptors, dtype=np.uint64).reshape(height, width, 1)
    else:
        words = np.stack([int_to_words(d, n_words) for d in descriptors]).reshape(height, width, n_words)
    words.setflags(write=False)
    return CensusField(words, window)


def _points_from_stream(outputs: Sequence[int], width: int) -> np.ndarray:
    idx = [j for j, d in enumerate(outputs) if d != NO_POINT]
    if not idx:
        return np.zeros((0, 3), dtype=np.int32)
    j = np.array(idx)
    d = np.array([outputs[i] for i in idx])
    return np.stack([j % width, j // width, d], axis=1).astype(np.int32)


def run_streaming_pipeline(left: GrayImage, right: GrayImage, cfg: PipelineConfig, record_taps: bool = True) -> PipelineResult:
    check_pair(left, right)
    w, h = left.width, left.height
    n = w * h
    depth = cfg.stage_depth
    timer = StageTimer()
    lp, rp = left.pixels.tolist(), right.pixels.tolist()
    for window in (cfg.sparse_window, cfg.dense_window):
        if w < window or h < window:
            raise InputTooSmall(f"{w}x{h} image is smaller than the {window}x{window} window")

    with timer("extract"):
        extract = run_group(
            [lp, rp],
            [CensusStage(w, h, cfg.sparse_window, depth), CensusStage(w, h, cfg.sparse_window, depth)],
            [
                SparseMatchStage(w, h, cfg.sparse_window, cfg.disparity_range, cfg.lr_check, cfg.downsample, depth),
                ConsistencyStage(w, h, cfg.filter, depth),
                RedundancyStage(w, h, cfg.filter, depth),
            ],
            n,
            record_heads=record_taps,
        )
        extract.check_contracts({"census": 2 * cfg.sparse_window})
        filtered = _points_from_stream(extract.outputs, w)

    with timer("prior"):
        prior, degenerate = sequential_stages(filtered, cfg, w, h)
        # fixed-size hand-off buffers: one-hot grid vectors and the rounded prior matrix
        provider = CandidateProvider(prior.grid.one_hot(), cfg.grid_size, prior.plane.rounded.copy(), cfg.disparity_range)

    with timer("dense"):
        tail: list[StreamStage] = [
            DenseMatchStage(
                w, h, cfg.dense_window, cfg.disparity_range, provider, cfg.lr_check_dense, LR_TOLERANCE, depth
            )
        ]
        if cfg.median_radius > 0:
            tail.append(MedianStage(w, h, cfg.median_radius, depth))
        dense = run_group(
            [lp, rp],
            [CensusStage(w, h, cfg.dense_window, depth), CensusStage(w, h, cfg.dense_window, depth)],
            tail,
            n,
            record_heads=record_taps,
        )
        dense.check_contracts({"census": 2 * cfg.dense_window, "median": 2 * (2 * cfg.median_radius + 1)})
        disparity = DisparityMap(np.array(dense.outputs, dtype=np.uint16).reshape(h, w), cfg.disparity_range)

    taps = {}
    if record_taps:
        taps = dict(
            census_left=descriptors_to_field(extract.head_outputs[0], w, h, cfg.sparse_window),
            census_right=descriptors_to_field(extract.head_outputs[1], w, h, cfg.sparse_window),
            dense_left=descriptors_to_field(dense.head_outputs[0], w, h, cfg.dense_window),
            dense_right=descriptors_to_field(dense.head_outputs[1], w, h, cfg.dense_window),
        )
    return PipelineResult(
        census_left=taps.get("census_left"),
        census_right=taps.get("census_right"),
        filtered=filtered,
        prior=prior,
        disparity=disparity,
        dense_left=taps.get("dense_left"),
        dense_right=taps.get("dense_right"),
        degenerate=degenerate,
        timings=timer.ms,
        steps={
            "extract": extract.steps,
            "extract_fill": extract.fill_latency,
            "dense": dense.steps,
            "dense_fill": dense.fill_latency,
            "pixels": n,
        },
    )


def run_streaming_sequence(
    frames: Sequence[tuple[GrayImage, GrayImage]],
    cfg: PipelineConfig,
    runner: Callable[[GrayImage, GrayImage, PipelineConfig], PipelineResult] | None = None,
) -> list[PipelineResult]:
    """Process a frame sequence with ``cfg.frames_in_flight`` independent pipeline instances.

    Every frame gets freshly built stages, so instances share no mutable
    state; results come back in input order.
    """
    runner = runner or (lambda l, r, c: run_streaming_pipeline(l, r, c, record_taps=False))
    if cfg.frames_in_flight == 1:
        return [runner(l, r, cfg) for l, r in frames]
    with ThreadPoolExecutor(max_workers=cfg.frames_in_flight) as pool:
        return list(pool.map(lambda pair: runner(pair[0], pair[1], cfg), frames))


def timed_sequence(frames, cfg: PipelineConfig, runner=None) -> tuple[list[PipelineResult], float]:
    t0 = time.perf_counter()
    results = run_streaming_sequence(frames, cfg, runner)
    return results, 1000 * (time.perf_counter() - t0)
