"""Raster-order streaming executor and its step-count model."""

from .buffers import Channel, LineBufferBank, WindowBuffer
from .cycles import report_cycle_model, resolution_ratio
from .executor import run_streaming_pipeline, run_streaming_sequence, stream_census

__all__ = [
    "Channel",
    "LineBufferBank",
    "WindowBuffer",
    "report_cycle_model",
    "resolution_ratio",
    "run_streaming_pipeline",
    "run_streaming_sequence",
    "stream_census",
]
