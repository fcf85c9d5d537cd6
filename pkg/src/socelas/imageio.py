"""Image containers and the on-disk formats used by the pipeline.

Formats:

* PGM (binary ``P5``, maxval <= 255) for grayscale inputs and debug dumps.
* 16-bit grayscale PNG with the KITTI convention: stored value = disparity * 256,
  0 means "no disparity".
* PFM (``Pf``, little-endian, scale -1.0), bottom row first; invalid pixels are -1.0.
* ``pgm8-scaled``: disparity mapped to round(d * 255 / (D - 1)), invalid -> 0.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError, MalformedHeader, Truncated, UnsupportedDepth, WriteError

INVALID = np.iinfo(np.uint16).max

DISPARITY_FORMATS = ("pgm8-scaled", "png16-kitti", "pfm")


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.ascontiguousarray(array, dtype=dtype)
    if out is array:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit single channel image; ``data[v, u]`` is pixel (u, v)."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise FormatError(f"expected a non-empty 2-D array, got shape {self.data.shape}")
        object.__setattr__(self, "data", _frozen(self.data, np.uint8))

    @classmethod
    def from_bytes(cls, width: int, height: int, payload: bytes) -> "GrayImage":
        if len(payload) != width * height:
            raise FormatError(f"payload has {len(payload)} bytes, expected {width * height}")
        return cls(np.frombuffer(payload, dtype=np.uint8).reshape(height, width))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def pixels(self) -> np.ndarray:
        """Flat row-major view; pixel (u, v) sits at ``v * width + u``."""
        return self.data.reshape(-1)

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class DisparityMap:
    """Integer disparities in [0, disparity_range - 1]; ``INVALID`` marks no estimate."""

    data: np.ndarray
    disparity_range: int

    def __post_init__(self):
        if self.data.ndim != 2:
            raise FormatError(f"expected a 2-D array, got shape {self.data.shape}")
        data = _frozen(self.data, np.uint16)
        bad = (data != INVALID) & (data >= self.disparity_range)
        if bad.any():
            raise FormatError(f"disparity outside [0, {self.disparity_range - 1}]")
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def valid(self) -> np.ndarray:
        return self.data != INVALID

    def density(self) -> float:
        return float(self.valid.mean())

    def __eq__(self, other):
        return (
            isinstance(other, DisparityMap)
            and self.disparity_range == other.disparity_range
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Raw KITTI fixed-point disparities (value / 256 pixels, 0 = unknown)."""

    raw: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "raw", _frozen(self.raw, np.uint16))

    @property
    def width(self) -> int:
        return self.raw.shape[1]

    @property
    def height(self) -> int:
        return self.raw.shape[0]

    @property
    def valid(self) -> np.ndarray:
        return self.raw != 0

    @property
    def disparity(self) -> np.ndarray:
        return self.raw.astype(np.float64) / 256.0


# -- PGM ---------------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pgm_header(buf: bytes) -> tuple[int, int, int, int]:
    if len(buf) == 0:
        raise Truncated("empty file")
    if buf[:2] != b"P5":
        raise MalformedHeader("not a binary PGM (missing P5 magic)")
    pos = 2
    fields = []
    for _ in range(3):
        m = _PGM_TOKEN.match(buf, pos)
        if m is None:
            raise Truncated("header ends early")
        token = m.group(1)
        if not token.isdigit():
            raise MalformedHeader(f"non-numeric header field {token!r}")
        fields.append(int(token))
        pos = m.end()
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise Truncated("missing whitespace after maxval")
    width, height, maxval = fields
    if width < 1 or height < 1 or maxval < 1:
        raise MalformedHeader(f"bad dimensions or maxval: {fields}")
    return width, height, maxval, pos + 1


def load_pgm(path: str | os.PathLike) -> GrayImage:
    buf = Path(path).read_bytes()
    width, height, maxval, offset = _pgm_header(buf)
    if maxval > 255:
        raise UnsupportedDepth(f"maxval {maxval} > 255")
    payload = buf[offset : offset + width * height]
    if len(payload) < width * height:
        raise Truncated(f"payload has {len(payload)} of {width * height} bytes")
    return GrayImage.from_bytes(width, height, payload)


def save_pgm(image: GrayImage | np.ndarray, path: str | os.PathLike) -> None:
    data = image.data if isinstance(image, GrayImage) else np.asarray(image, dtype=np.uint8)
    height, width = data.shape
    try:
        with open(path, "wb") as f:
            f.write(b"P5\n%d %d\n255\n" % (width, height))
            f.write(np.ascontiguousarray(data, dtype=np.uint8).tobytes())
    except OSError as exc:
        raise WriteError(str(exc)) from exc


# -- PNG ---------------------------------------------------------------------

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _png_ihdr(path: Path) -> tuple[int, int]:
    """Return (bit depth, color type) straight from the IHDR chunk."""
    with open(path, "rb") as f:
        head = f.read(33)
    if len(head) < 33 or head[:8] != _PNG_MAGIC or head[12:16] != b"IHDR":
        raise FormatError(f"{path} is not a PNG file")
    return head[24], head[25]


def load_gt_png16(path: str | os.PathLike) -> GroundTruth:
    path = Path(path)
    depth, color = _png_ihdr(path)
    if depth != 16 or color != 0:
        raise FormatError(f"{path}: expected 16-bit grayscale PNG, got depth {depth} color type {color}")
    with Image.open(path) as im:
        raw = np.array(im, dtype=np.uint16)
    return GroundTruth(raw)


def load_gray(path: str | os.PathLike) -> GrayImage:
    """Load a PGM or an 8-bit grayscale PNG."""
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".pnm"):
        return load_pgm(path)
    depth, color = _png_ihdr(path)
    if depth != 8 or color != 0:
        raise FormatError(f"{path}: expected 8-bit grayscale PNG, got depth {depth} color type {color}")
    with Image.open(path) as im:
        return GrayImage(np.array(im, dtype=np.uint8))


def _write_png16(raw: np.ndarray, path: Path) -> None:
    try:
        Image.fromarray(np.ascontiguousarray(raw, dtype=np.uint16)).save(path, format="PNG")
    except OSError as exc:
        raise WriteError(str(exc)) from exc


# -- PFM ---------------------------------------------------------------------


def save_pfm(values: np.ndarray, path: str | os.PathLike) -> None:
    values = np.asarray(values, dtype="<f4")
    height, width = values.shape
    try:
        with open(path, "wb") as f:
            f.write(b"Pf\n%d %d\n-1.0\n" % (width, height))
            f.write(np.ascontiguousarray(np.flipud(values)).tobytes())
    except OSError as exc:
        raise WriteError(str(exc)) from exc


def load_pfm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        tag = f.readline().strip()
        if tag != b"Pf":
            raise MalformedHeader(f"unsupported PFM tag {tag!r}")
        dims = f.readline().split()
        scale = float(f.readline().strip())
        width, height = int(dims[0]), int(dims[1])
        dtype = "<f4" if scale < 0 else ">f4"
        payload = f.read()
    if len(payload) < 4 * width * height:
        raise Truncated("PFM payload too short")
    data = np.frombuffer(payload[: 4 * width * height], dtype=dtype).reshape(height, width)
    return np.flipud(data).astype(np.float32)


# -- disparity maps ------------------------------------------------------------


def disparity_to_png16(dmap: DisparityMap) -> np.ndarray:
    out = dmap.data.astype(np.uint32) * 256
    out[~dmap.valid] = 0
    return out.astype(np.uint16)


def disparity_to_pgm8(dmap: DisparityMap) -> np.ndarray:
    scale = 255.0 / max(dmap.disparity_range - 1, 1)
    out = np.floor(dmap.data.astype(np.float64) * scale + 0.5)
    out[~dmap.valid] = 0
    return out.astype(np.uint8)


def disparity_to_float(dmap: DisparityMap) -> np.ndarray:
    out = dmap.data.astype(np.float32)
    out[~dmap.valid] = -1.0
    return out


def save_disparity(dmap: DisparityMap, path: str | os.PathLike, format: str = "png16-kitti") -> None:
    path = Path(path)
    if format == "png16-kitti":
        _write_png16(disparity_to_png16(dmap), path)
    elif format == "pgm8-scaled":
        save_pgm(disparity_to_pgm8(dmap), path)
    elif format == "pfm":
        save_pfm(disparity_to_float(dmap), path)
    else:
        raise ValueError(f"unknown disparity format {format!r}; choose from {DISPARITY_FORMATS}")


def format_for_path(path: str | os.PathLike) -> str:
    suffix = Path(path).suffix.lower()
    return {".png": "png16-kitti", ".pgm": "pgm8-scaled", ".pfm": "pfm"}.get(suffix, "png16-kitti")


__all__ = [
    "INVALID",
    "GrayImage",
    "DisparityMap",
    "GroundTruth",
    "load_pgm",
    "save_pgm",
    "load_gray",
    "load_gt_png16",
    "save_disparity",
    "save_pfm",
    "load_pfm",
]
