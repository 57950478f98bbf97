"""Small numeric and scheduling helpers shared across the package."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np


class Kahan:
    """Neumaier-compensated accumulator for long sums of binary64 terms."""

    __slots__ = ("_s", "_c")

    def __init__(self, start: float = 0.0) -> None:
        self._s = float(start)
        self._c = 0.0

    def add(self, value: float) -> None:
        s = self._s
        t = s + value
        if abs(s) >= abs(value):
            self._c += (s - t) + value
        else:
            self._c += (value - t) + s
        self._s = t

    @property
    def value(self) -> float:
        return self._s + self._c


def kahan_cumsum(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Compensated running sum; entry i holds sum(values[:i+1])."""
    out = np.empty(len(values))
    acc = Kahan()
    for i, v in enumerate(values):
        acc.add(float(v))
        out[i] = acc.value
    return out


def chunk_ranges(n_items: int, chunk: int) -> list[tuple[int, int]]:
    """Split range(n_items) into [lo, hi) slices of at most `chunk` items."""
    if n_items <= 0:
        return []
    chunk = max(1, int(chunk))
    return [(lo, min(lo + chunk, n_items)) for lo in range(0, n_items, chunk)]


def map_ordered(fn: Callable[[int, int], object],
                ranges: Sequence[tuple[int, int]],
                threads: int = 1) -> list:
    """Apply fn over index ranges, preserving order in the result list.

    The per-range work is identical for any thread count, and the caller
    reduces the ordered list sequentially, so results are bit-reproducible
    regardless of `threads`.
    """
    if threads <= 1 or len(ranges) <= 1:
        return [fn(lo, hi) for lo, hi in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, lo, hi) for lo, hi in ranges]
        return [f.result() for f in futures]
