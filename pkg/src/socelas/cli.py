"""Command-line interface: ``socelas {depth,eval,sweep,bench,inspect,config}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .errors import SocElasError
from .evaluation import evaluate_dataset, find_samples, rows_to_csv, sweep, sweep_configs
from .imageio import DISPARITY_FORMATS, GrayImage, format_for_path, load_gray, save_disparity, save_pfm
from .pipeline import PipelineConfig, run_batch, run_pipeline
from .stream.cycles import report_cycle_model
from .stream.executor import run_streaming_pipeline, run_streaming_sequence
from .synthetic import shifted_pair

log = logging.getLogger("socelas")

INSPECT_STAGES = ("support", "filtered", "grid", "mesh", "prior")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x.split("/")[-1]) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None


def load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise SocElasError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key] = value
    if getattr(args, "executor", None):
        overrides["executor"] = args.executor
    if getattr(args, "frames_in_flight", None):
        overrides["frames_in_flight"] = str(args.frames_in_flight)
    if overrides:
        merged = dict(line.split("=", 1) for line in cfg.to_text().splitlines())
        merged.update(overrides)
        cfg = PipelineConfig.from_mapping(merged)
    return cfg


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- subcommands -----------------------------------------------------------------------


def cmd_depth(args) -> int:
    cfg = load_config(args)
    left, right = load_gray(args.left), load_gray(args.right)
    result = run_pipeline(left, right, cfg)
    fmt = args.format or format_for_path(args.output)
    save_disparity(result.disparity, args.output, fmt)
    log.info(
        "%s: %d support points, density %.3f, %s",
        args.output,
        len(result.filtered),
        result.disparity.density(),
        ", ".join(f"{k} {v:.1f} ms" for k, v in result.timings.items()),
    )
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args)
    res = evaluate_dataset(args.dataset, args.gt, cfg, limit=args.limit, workers=args.workers)
    summary = res.summary()
    if args.per_image:
        summary["images"] = [
            {
                "name": im.name,
                "error_pct": None if im.rates is None else 100 * im.rates.bad_rate,
                "error_all_pct": None if im.rates is None else 100 * im.rates.bad_rate_all,
                "density": im.density,
                "support_points": im.support_points,
                "ms": im.ms,
            }
            for im in res.images
        ]
    _write(json.dumps(summary, indent=2) + "\n", args.output)
    return 0 if res.images else 1


def cmd_sweep(args) -> int:
    base = load_config(args)
    samples = find_samples(args.dataset, args.gt)
    if args.limit is not None:
        samples = samples[: args.limit]
    configs = sweep_configs(args.windows, args.dense, args.downsample, base)
    _write(rows_to_csv(sweep(samples, configs, args.workers)), args.output)
    return 0


def _bench_frames(args) -> list[tuple[GrayImage, GrayImage]]:
    if args.left and args.right:
        pair = (load_gray(args.left), load_gray(args.right))
        return [pair] * args.frames
    return [shifted_pair(args.width, args.height, args.shift, seed) for seed in range(args.frames)]


def cmd_bench(args) -> int:
    cfg = load_config(args)
    frames = _bench_frames(args)
    width, height = frames[0][0].width, frames[0][0].height
    if cfg.executor == "stream":
        runner = lambda l, r, c: run_streaming_pipeline(l, r, c, record_taps=False)  # noqa: E731
    else:
        runner = run_batch
    for _ in range(args.warmup):
        runner(*frames[0], cfg)
    t0 = time.perf_counter()
    results = run_streaming_sequence(frames, cfg, runner)
    total_ms = 1000 * (time.perf_counter() - t0)
    stage_ms: dict[str, list[float]] = {}
    for r in results:
        for k, v in r.timings.items():
            stage_ms.setdefault(k, []).append(v)
    report = {
        "executor": cfg.executor,
        "frames_in_flight": cfg.frames_in_flight,
        "width": width,
        "height": height,
        "frames": len(frames),
        "warmup": args.warmup,
        "wall_ms_total": total_ms,
        "wall_ms_per_frame": total_ms / len(frames),
        "stage_ms_mean": {k: float(np.mean(v)) for k, v in stage_ms.items()},
        "measured_steps": results[0].steps or None,
        "cycle_model": report_cycle_model(cfg, width, height),
    }
    _write(json.dumps(report, indent=2) + "\n", args.output)
    return 0


def _points_csv(points: np.ndarray) -> str:
    lines = ["u,v,d"] + [f"{u},{v},{d}" for u, v, d in points.tolist()]
    return "\n".join(lines) + "\n"


def cmd_inspect(args) -> int:
    cfg = load_config(args)
    left, right = load_gray(args.left), load_gray(args.right)
    result = run_batch(left, right, cfg)
    stage = args.stage
    if stage == "support":
        _write(_points_csv(result.support), args.output)
    elif stage == "filtered":
        _write(_points_csv(result.filtered), args.output)
    elif stage == "grid":
        grid = result.prior.grid
        digits = -(-cfg.disparity_range // 4)
        lines = ["cell_v,cell_u,mask_hex"]
        for cv, row in enumerate(grid.cell_ints()):
            for cu, mask in enumerate(row):
                lines.append(f"{cv},{cu},{mask:0{digits}x}")
        _write("\n".join(lines) + "\n", args.output)
    elif stage == "mesh":
        tri = result.prior.triangulation
        lines = []
        if tri is not None:
            lines += [f"v {u} {v} {d}" for u, v, d in tri.vertices.tolist()]
            lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in tri.triangles.tolist()]
        _write("\n".join(lines) + "\n", args.output)
    elif stage == "prior":
        if not args.output:
            raise SocElasError("inspect --stage prior writes a PFM file; pass -o")
        plane = result.prior.plane
        save_pfm(np.where(plane.covered, plane.prior, -1.0), args.output)
    return 0


def cmd_config(args) -> int:
    _write(load_config(args).to_text(documented=True), args.output)
    return 0


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="socelas", description="Support-point stereo disparity engine")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one configuration key")
        return p

    p = with_config(sub.add_parser("depth", help="compute a disparity map for one rectified pair"))
    p.add_argument("-l", "--left", required=True)
    p.add_argument("-r", "--right", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", choices=DISPARITY_FORMATS, help="default: inferred from the output suffix")
    p.add_argument("--executor", choices=("batch", "stream"))
    p.set_defaults(func=cmd_depth)

    p = with_config(sub.add_parser("eval", help="KITTI-style error over a dataset directory"))
    p.add_argument("--dataset", required=True, help="directory with image_0/image_1 or left/right")
    p.add_argument("--gt", help="directory of 16-bit ground-truth PNGs, matched by file stem")
    p.add_argument("--limit", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--per-image", action="store_true")
    p.add_argument("-o", "--output")
    p.add_argument("--executor", choices=("batch", "stream"))
    p.set_defaults(func=cmd_eval)

    p = with_config(sub.add_parser("sweep", help="error/density/time table over window and downsample settings"))
    p.add_argument("--dataset", required=True)
    p.add_argument("--gt")
    p.add_argument("--windows", type=_int_list, default=[7, 9, 11, 13])
    p.add_argument("--dense", type=_int_list, default=[3, 5, 7])
    p.add_argument("--downsample", type=_int_list, default=[1, 8, 32])
    p.add_argument("--limit", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = with_config(sub.add_parser("bench", help="wall-clock timing plus the step-count model, as JSON"))
    p.add_argument("--executor", choices=("batch", "stream"))
    p.add_argument("--frames-in-flight", type=int, choices=(1, 2))
    p.add_argument("-l", "--left")
    p.add_argument("-r", "--right")
    p.add_argument("--width", type=int, default=160)
    p.add_argument("--height", type=int, default=120)
    p.add_argument("--shift", type=int, default=7)
    p.add_argument("--frames", type=int, default=4)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)

    p = with_config(sub.add_parser("inspect", help="dump one intermediate product"))
    p.add_argument("--stage", required=True, choices=INSPECT_STAGES)
    p.add_argument("-l", "--left", required=True)
    p.add_argument("-r", "--right", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_inspect)

    p = with_config(sub.add_parser("config", help="print every configuration key with its value and meaning"))
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SocElasError, FileNotFoundError) as exc:
        print(f"socelas {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
