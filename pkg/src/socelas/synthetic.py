"""Synthetic stereo pairs with exactly known disparity, for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .imageio import GrayImage, GroundTruth


def random_texture(width: int, height: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 256, size=(height, width), dtype=np.uint8)


def shifted_pair(width: int, height: int, shift: int, seed: int = 0) -> tuple[GrayImage, GrayImage]:
    """Fronto-parallel pair: left (u, v) matches right (u - shift, v) everywhere it can."""
    rng = np.random.default_rng(seed)
    left = random_texture(width, height, rng)
    right = random_texture(width, height, rng)
    right[:, : width - shift] = left[:, shift:]
    return GrayImage(left), GrayImage(right)


def shifted_ground_truth(width: int, height: int, shift: int) -> GroundTruth:
    raw = np.full((height, width), shift * 256, dtype=np.uint16)
    raw[:, :shift] = 0
    return GroundTruth(raw)


class RowNoiseTexture:
    """Random texture defined on continuous ``u`` and integer ``v``.

    Each row is white noise on a lattice ``oversample`` times finer than the
    pixel grid, smoothed with a Gaussian of ``sigma`` pixels and linearly
    interpolated. Unlike a sum of sinusoids it has no repeating structure,
    so the census cost has a single clear minimum.
    """

    def __init__(self, width: int, height: int, rng: np.random.Generator, sigma: float = 1.5, oversample: int = 4):
        self.oversample = oversample
        n = (width + 4) * oversample
        s = sigma * oversample
        x = np.arange(-int(4 * s), int(4 * s) + 1)
        kernel = np.exp(-0.5 * (x / s) ** 2)
        kernel /= kernel.sum()
        noise = rng.normal(size=(height, n + len(x) - 1))
        rows = np.stack([np.convolve(r, kernel, mode="valid") for r in noise])
        self.rows = (rows - rows.mean()) / rows.std()
        self.lattice = np.arange(n, dtype=np.float64)

    def __call__(self, s: np.ndarray, v: int) -> np.ndarray:
        val = np.interp(np.asarray(s) * self.oversample, self.lattice, self.rows[v])
        return np.clip(np.round(128 + 50 * val), 0, 255).astype(np.uint8)


def render_pair(disparity: np.ndarray, seed: int = 0) -> tuple[GrayImage, GrayImage]:
    """Render a pair whose left-image disparity is ``disparity`` (h, w), real-valued.

    Right pixel ``x`` shows the surface point that the left image sees at
    the ``u`` solving ``u - d(u) = x``, so each row's ``u - d(u)`` must be
    strictly increasing. Right pixels beyond the mapped span sample the
    texture at their end points (clamped).
    """
    h, w = disparity.shape
    tex = RowNoiseTexture(w, h, np.random.default_rng(seed))
    us = np.arange(w, dtype=np.float64)
    left = np.empty((h, w), dtype=np.uint8)
    right = np.empty((h, w), dtype=np.uint8)
    for v in range(h):
        target = us - disparity[v]
        if np.any(np.diff(target) <= 0):
            raise ValueError("disparity field folds over; u - d(u) must increase along rows")
        left[v] = tex(us, v)
        right[v] = tex(np.interp(us, target, us), v)
    return GrayImage(left), GrayImage(right)


def two_plane_disparity(width: int, height: int) -> np.ndarray:
    """A roof of two slanted planes meeting along a vertical crease at mid-width.

    Disparity starts near 1 at the left border and stays below 8, so only
    the first couple of columns have their match outside the right image;
    no support point can be extracted there anyway (census border).
    """
    vv, uu = np.mgrid[0:height, 0:width].astype(np.float64)
    mid = width / 2
    left_plane = 1.0 + 0.06 * uu + 0.01 * vv
    right_plane = 1.0 + 0.06 * mid - 0.03 * (uu - mid) + 0.01 * vv
    return np.where(uu < mid, left_plane, right_plane)


def plane_pair(width: int, height: int, seed: int = 0) -> tuple[GrayImage, GrayImage, np.ndarray]:
    disparity = two_plane_disparity(width, height)
    left, right = render_pair(disparity, seed)
    return left, right, disparity
