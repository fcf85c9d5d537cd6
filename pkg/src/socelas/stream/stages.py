"""Stream stages: each consumes at most one item and emits at most one item per step.

A stage with lookahead ``L`` emits the result for raster index ``j`` on the
step that input ``j + L`` arrives; once the input is exhausted it keeps
emitting one result per step (feeding filler into its buffers) until all
``width * height`` results are out. ``depth`` extra register steps sit on
the output. ``None`` is a bubble; real results are never ``None``.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ..census import neighbor_offsets
from ..filters import BackwardRedundancy, FilterConfig
from ..imageio import INVALID
from ..sparse import DOWNSAMPLE_STRIDES, accept, ambiguity_scores
from .buffers import LineBufferBank, WindowBuffer

NO_POINT = -1


class StreamStage:
    name = "stage"
    lookahead = 0

    def __init__(self, width: int, height: int, depth: int = 0):
        self.width = width
        self.height = height
        self.n = width * height
        self.depth = depth
        self._delay: deque = deque([None] * depth)
        self.received = 0
        self.produced = 0
        self.emitted = 0
        self.steps = 0
        self.first_emit: int | None = None
        self.last_emit: int | None = None

    @property
    def fill_latency(self) -> int:
        return self.lookahead + self.depth

    def step(self, item):
        t = self.steps
        self.steps += 1
        if item is not None:
            self.accept(item)
            self.received += 1
        out = None
        if self.produced < self.n and (self.received - self.produced > self.lookahead or self.received == self.n):
            if item is None and self.received == self.n:
                self.accept_filler()
            out = self.produce(self.produced)
            self.produced += 1
        if self.depth:
            self._delay.append(out)
            out = self._delay.popleft()
        if out is not None:
            if self.first_emit is None:
                self.first_emit = t
            self.last_emit = t
            self.emitted += 1
        return out

    @property
    def contiguous(self) -> bool:
        """True when every step between first and last emission produced an item."""
        if self.first_emit is None:
            return self.n == 0
        return self.last_emit - self.first_emit + 1 == self.emitted

    def accept(self, item) -> None:
        raise NotImplementedError

    def accept_filler(self) -> None:
        pass

    def produce(self, j: int):
        raise NotImplementedError


class _WindowStage(StreamStage):
    """Line buffers of ``2 * radius + 1`` rows feeding a square window buffer."""

    filler = 0
    dtype = np.uint8

    def __init__(self, width: int, height: int, radius: int, depth: int = 0):
        super().__init__(width, height, depth)
        self.radius = radius
        size = 2 * radius + 1
        self.lookahead = radius * width + radius
        self.bank = LineBufferBank(size, width, self.filler, self.dtype)
        self.window = WindowBuffer(size, self.filler, self.dtype)

    def accept(self, item) -> None:
        self.window.shift_in(self.bank.push(item))

    def accept_filler(self) -> None:
        self.window.shift_in(self.bank.push(self.filler))

    def _in_image(self, j: int):
        """Window sub-grid restricted to image pixels around the center of index j."""
        u, v = j % self.width, j // self.width
        R = self.radius
        c0, c1 = max(0, R - u), min(2 * R + 1, self.width - u + R)
        r0, r1 = max(0, R - v), min(2 * R + 1, self.height - v + R)
        return self.window.grid[r0:r1, c0:c1]


class CensusStage(_WindowStage):
    name = "census"

    def __init__(self, width: int, height: int, window: int, depth: int = 0):
        super().__init__(width, height, window // 2, depth)
        size = window
        center = self.radius * size + self.radius
        self._nbr = np.array([(dv + self.radius) * size + du + self.radius for dv, du in neighbor_offsets(window)])
        self._center = center
        bits = window * window - 1
        self._pad = -bits % 8

    def produce(self, j: int) -> int:
        u, v, r = j % self.width, j // self.width, self.radius
        if not (r <= u < self.width - r and r <= v < self.height - r):
            return 0
        flat = self.window.grid.ravel()
        packed = np.packbits(flat[self._nbr] < flat[self._center])
        return int.from_bytes(packed.tobytes(), "big") >> self._pad


class _DescriptorRing:
    """The most recent descriptors of one image, addressed by raster index."""

    def __init__(self, size: int):
        self.size = size
        self.items = [0] * size

    def __setitem__(self, j: int, value: int) -> None:
        self.items[j % self.size] = value

    def __getitem__(self, j: int) -> int:
        return self.items[j % self.size]


def _right_winner(left: _DescriptorRing, right: _DescriptorRing, j_right: int, x: int, width: int, radius: int, D: int) -> int:
    """Best disparity for right pixel x (raster index j_right) against left pixels x + d."""
    rd = right[j_right]
    best, best_cost = -1, None
    for d in range(min(D - 1, width - 1 - radius - x) + 1):
        c = (left[j_right + d] ^ rd).bit_count()
        if best_cost is None or c < best_cost:
            best, best_cost = d, c
    return best


class SparseMatchStage(StreamStage):
    """Support matching with the ambiguity test, fused with downsampling.

    Emits the accepted disparity or ``NO_POINT``. With the left-right check
    on, the stage looks ``D - 1`` pixels ahead so the right-to-left winner
    can see every left candidate.
    """

    name = "sparse_match"

    def __init__(self, width, height, window, disparity_range, lr_check=False, downsample=1, depth=0):
        super().__init__(width, height, depth)
        self.radius = window // 2
        self.D = disparity_range
        self.lr_check = lr_check
        self.stride = DOWNSAMPLE_STRIDES[downsample]
        self.lookahead = disparity_range - 1 if lr_check else 0
        size = 2 * disparity_range + 2
        self.left = _DescriptorRing(size)
        self.right = _DescriptorRing(size)
        self._idx = 0

    def accept(self, item) -> None:
        self.left[self._idx], self.right[self._idx] = item
        self._idx += 1

    def produce(self, j: int) -> int:
        w, r = self.width, self.radius
        u, v = j % w, j // w
        if not (r <= u < w - r and r <= v < self.height - r):
            return NO_POINT
        ld = self.left[j]
        right = self.right
        costs = [(ld ^ right[j - d]).bit_count() for d in range(min(self.D - 1, u - r) + 1)]
        scores = ambiguity_scores(costs)
        if not accept(scores):
            return NO_POINT
        d = scores.d_best
        if self.lr_check and _right_winner(self.left, right, j - d, u - d, w, r, self.D) != d:
            return NO_POINT
        su, sv = self.stride
        if u % su or v % sv:
            return NO_POINT
        return d


class ConsistencyStage(_WindowStage):
    """Keeps a candidate with at least ``k`` similar neighbors in its square window."""

    name = "consistency"
    filler = NO_POINT
    dtype = np.int32

    def __init__(self, width: int, height: int, cfg: FilterConfig, depth: int = 0):
        super().__init__(width, height, cfg.consistency_window, depth)
        self.tol = cfg.consistency_tolerance
        self.k = cfg.min_consistent_neighbors

    def produce(self, j: int) -> int:
        R = self.radius
        d = int(self.window.grid[R, R])
        if d == NO_POINT:
            return NO_POINT
        win = self._in_image(j)
        support = np.count_nonzero((win != NO_POINT) & (np.abs(win - d) <= self.tol)) - 1
        return d if support >= self.k else NO_POINT


class RedundancyStage(StreamStage):
    name = "redundancy"

    def __init__(self, width: int, height: int, cfg: FilterConfig, depth: int = 0):
        super().__init__(width, height, depth)
        self.state = BackwardRedundancy(cfg)
        self._current = NO_POINT

    def accept(self, item) -> None:
        self._current = item

    def produce(self, j: int) -> int:
        d = self._current
        if d == NO_POINT:
            return NO_POINT
        u, v = j % self.width, j // self.width
        return d if self.state.offer(u, v, d) else NO_POINT


class DenseMatchStage(StreamStage):
    """Winner-take-all over the candidate bitmask supplied for each pixel."""

    name = "dense_match"

    def __init__(self, width, height, window, disparity_range, candidates, lr_check=False, lr_tolerance=1, depth=0):
        super().__init__(width, height, depth)
        self.radius = window // 2
        self.D = disparity_range
        self.candidates = candidates
        self.lr_check = lr_check
        self.lr_tolerance = lr_tolerance
        self.lookahead = disparity_range - 1 if lr_check else 0
        size = 2 * disparity_range + 2
        self.left = _DescriptorRing(size)
        self.right = _DescriptorRing(size)
        self._idx = 0

    def accept(self, item) -> None:
        self.left[self._idx], self.right[self._idx] = item
        self._idx += 1

    def produce(self, j: int) -> int:
        w, r = self.width, self.radius
        u, v = j % w, j // w
        if not (r <= u < w - r and r <= v < self.height - r):
            return INVALID
        mask = self.candidates(u, v) & ((1 << (u - r + 1)) - 1)
        ld = self.left[j]
        right = self.right
        best, best_cost = INVALID, None
        while mask:
            low = mask & -mask
            d = low.bit_length() - 1
            mask ^= low
            c = (ld ^ right[j - d]).bit_count()
            if best_cost is None or c < best_cost:
                best, best_cost = d, c
        if best != INVALID and self.lr_check:
            back = _right_winner(self.left, right, j - best, u - best, w, r, self.D)
            if back < 0 or abs(back - best) > self.lr_tolerance:
                return INVALID
        return best


class MedianStage(_WindowStage):
    name = "median"
    filler = INVALID
    dtype = np.uint16

    def produce(self, j: int) -> int:
        R = self.radius
        center = int(self.window.grid[R, R])
        if center == INVALID:
            return INVALID
        win = self._in_image(j)
        vals = np.sort(win[win != INVALID], axis=None)
        return int(vals[(len(vals) - 1) // 2])
