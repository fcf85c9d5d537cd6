"""Census descriptors and Hamming costs.

A descriptor holds one bit per non-center pixel of a W x W window, set when
that pixel is strictly darker than the center. Bits are ordered row-major
over the window with the first neighbor as the most significant bit, so
for W=3 the descriptor reads like ``0b n0 n1 n2 n3 n5 n6 n7 n8``.

Descriptors are stored as little-endian 64-bit words: word ``j`` carries
bits ``64*j .. 64*j + 63`` of the integer value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputTooSmall
from .imageio import GrayImage

WINDOW_SIZES = (3, 5, 7, 9, 11, 13)


@dataclass(frozen=True)
class CensusConfig:
    window: int = 9

    def __post_init__(self):
        if self.window not in WINDOW_SIZES:
            raise ConfigError(f"census window must be one of {WINDOW_SIZES}, got {self.window}")

    @property
    def radius(self) -> int:
        return self.window // 2

    @property
    def bits(self) -> int:
        return self.window * self.window - 1

    @property
    def words(self) -> int:
        return (self.bits + 63) // 64


def neighbor_offsets(window: int) -> list[tuple[int, int]]:
    """(dv, du) of every non-center window pixel, row-major."""
    r = window // 2
    return [(dv, du) for dv in range(-r, r + 1) for du in range(-r, r + 1) if (dv, du) != (0, 0)]


@dataclass(frozen=True, eq=False)
class CensusField:
    words: np.ndarray  # (height, width, n_words) uint64
    window: int

    @property
    def height(self) -> int:
        return self.words.shape[0]

    @property
    def width(self) -> int:
        return self.words.shape[1]

    @property
    def bits(self) -> int:
        return self.window * self.window - 1

    @property
    def valid(self) -> np.ndarray:
        return valid_mask(self.width, self.height, self.window)

    def descriptor(self, u: int, v: int) -> int:
        return words_to_int(self.words[v, u])

    def __eq__(self, other):
        return (
            isinstance(other, CensusField)
            and self.window == other.window
            and np.array_equal(self.words, other.words)
        )


def valid_mask(width: int, height: int, window: int) -> np.ndarray:
    r = window // 2
    mask = np.zeros((height, width), dtype=bool)
    mask[r : height - r, r : width - r] = True
    return mask


def words_to_int(words: np.ndarray) -> int:
    value = 0
    for j, w in enumerate(words.tolist()):
        value |= int(w) << (64 * j)
    return value


def int_to_words(value: int, n_words: int) -> np.ndarray:
    mask = (1 << 64) - 1
    return np.array([(value >> (64 * j)) & mask for j in range(n_words)], dtype=np.uint64)


def census_transform(img: GrayImage, cfg: CensusConfig) -> CensusField:
    w, h, r = img.width, img.height, cfg.radius
    if w < cfg.window or h < cfg.window:
        raise InputTooSmall(f"{w}x{h} image is smaller than the {cfg.window}x{cfg.window} window")
    data = img.data
    words = np.zeros((h, w, cfg.words), dtype=np.uint64)
    center = data[r : h - r, r : w - r]
    inner = words[r : h - r, r : w - r]
    for k, (dv, du) in enumerate(neighbor_offsets(cfg.window)):
        pos = cfg.bits - 1 - k
        neighbor = data[r + dv : h - r + dv, r + du : w - r + du]
        bit = (neighbor < center).astype(np.uint64) << np.uint64(pos % 64)
        inner[..., pos // 64] |= bit
    words.setflags(write=False)
    return CensusField(words, cfg.window)


def hamming(a: int, b: int) -> int:
    return (a ^ b).bit_count()


def hamming_words(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamming distance between word-packed descriptors, reduced over the last axis."""
    return np.bitwise_count(a ^ b).sum(axis=-1, dtype=np.uint16)
