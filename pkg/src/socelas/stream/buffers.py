"""Storage primitives of the streaming model: line buffers, window registers, FIFOs."""

from __future__ import annotations

from collections import deque

import numpy as np


class LineBufferBank:
    """``n_rows`` row-wide buffers fed one pixel per step.

    Pushing a value at the write cursor shifts that column up by one row
    (the top value falls out) and stores the value in the bottom row. The
    column is returned so a window buffer can take it.
    """

    def __init__(self, n_rows: int, width: int, fill=0, dtype=np.uint8):
        self.rows = np.full((n_rows, width), fill, dtype=dtype)
        self.width = width
        self.cursor = 0

    @property
    def resident_rows(self) -> int:
        return self.rows.shape[0]

    def push(self, value) -> np.ndarray:
        c = self.cursor
        col = self.rows[:, c]
        col[:-1] = col[1:].copy()
        col[-1] = value
        self.cursor = c + 1 if c + 1 < self.width else 0
        return col


class WindowBuffer:
    """Square register grid; every step shifts left one column and loads a new rightmost column."""

    def __init__(self, size: int, fill=0, dtype=np.uint8):
        self.grid = np.full((size, size), fill, dtype=dtype)

    def shift_in(self, column: np.ndarray) -> np.ndarray:
        g = self.grid
        g[:, :-1] = g[:, 1:]
        g[:, -1] = column
        return g


class Channel:
    """Bounded FIFO between two stream stages. Overflow is a modeling error, not back-pressure."""

    def __init__(self, name: str, capacity: int = 2):
        self.name = name
        self.capacity = capacity
        self._q: deque = deque()
        self.peak = 0

    def put(self, item) -> None:
        if len(self._q) >= self.capacity:
            raise OverflowError(f"channel {self.name} exceeded capacity {self.capacity}")
        self._q.append(item)
        self.peak = max(self.peak, len(self._q))

    def get(self):
        return self._q.popleft() if self._q else None

    def __len__(self) -> int:
        return len(self._q)
