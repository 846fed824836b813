"""Index-space partitioning of the sample grid ``0, step, 2*step, ..., maxvalue``.

Workers are handed global index ranges rather than value ranges, and every
sample is produced as ``k * step`` (one multiplication), so the union of the
worker slices is bitwise the grid a single process would generate.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

import numpy as np

from .errors import GridError, IndexOutOfRange, InvalidPartitioning

ALIGN_RTOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    maxvalue: float
    step: float

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0):
            raise GridError(f"step must be a positive finite number, got {self.step!r}")
        if not (math.isfinite(self.maxvalue) and self.maxvalue > 0):
            raise GridError(f"maxvalue must be a positive finite number, got {self.maxvalue!r}")
        n = round(self.maxvalue / self.step)
        if n < 1 or abs(n * self.step - self.maxvalue) > ALIGN_RTOL * self.maxvalue:
            raise GridError(
                f"maxvalue {self.maxvalue!r} is not a multiple of step {self.step!r}")

    @property
    def n(self) -> int:
        """Index of the last grid point (point count minus one)."""
        return round(self.maxvalue / self.step)

    @property
    def point_count(self) -> int:
        return self.n + 1


@dataclass(frozen=True)
class Partition:
    rank: int
    start_index: int
    end_index: int

    def __post_init__(self):
        if self.rank < 0:
            raise InvalidPartitioning(f"negative rank {self.rank}")
        if self.start_index < 0 or self.start_index > self.end_index:
            raise InvalidPartitioning(
                f"bad index range [{self.start_index}, {self.end_index}]")

    @property
    def size(self) -> int:
        return self.end_index - self.start_index + 1


def plan_partitions(grid: GridSpec, nproc: int) -> list[Partition]:
    """Split indices ``0..N`` into ``nproc`` contiguous, ordered ranges.

    Partition ``i`` starts at ``ceil(i * (N + 1) / nproc)``; sizes therefore
    differ by at most one and, when ``nproc`` divides ``N``, rank 0 holds the
    single extra point.  Each interior boundary point stays with the lower
    rank.
    """
    n = grid.n
    if not isinstance(nproc, numbers.Integral) or nproc < 1 or nproc > n:
        raise InvalidPartitioning(f"nproc must be in [1, {n}], got {nproc!r}")
    nproc = int(nproc)
    count = n + 1
    starts = [-(-i * count // nproc) for i in range(nproc + 1)]
    return [Partition(i, starts[i], starts[i + 1] - 1) for i in range(nproc)]


def grid_point(k: int, grid: GridSpec) -> float:
    if k < 0 or k > grid.n:
        raise IndexOutOfRange(f"index {k} outside [0, {grid.n}]")
    return float(k) * grid.step


def index_points(start: int, end: int, step: float) -> np.ndarray:
    """``[k * step for k in start..end]`` as a float64 array."""
    if start < 0 or end < start:
        raise IndexOutOfRange(f"bad index range [{start}, {end}]")
    return np.arange(start, end + 1, dtype=np.int64).astype(np.float64) * step


def partition_points(p: Partition, grid: GridSpec) -> np.ndarray:
    if p.end_index > grid.n:
        raise IndexOutOfRange(f"partition end {p.end_index} beyond grid end {grid.n}")
    return index_points(p.start_index, p.end_index, grid.step)
