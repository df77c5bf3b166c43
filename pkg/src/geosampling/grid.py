"""Integer-grid probabilities and interval sets on ``[0, G)``.

A probability is stored as a count of grid cells out of a resolution ``G``
(``cells / G`` is the value), so every layout operation is exact.  An
``IntervalSet`` is the bar of one unit: sorted, disjoint, non-adjacent
half-open intervals ``[a, b)`` of cell indices.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .exceptions import DomainError, PreconditionError

DEFAULT_GRID = 10**9


def check_grid(grid: int) -> int:
    if not isinstance(grid, int) or grid <= 0:
        raise DomainError(f"grid resolution must be a positive integer, got {grid!r}")
    return grid


def to_cells(probs: Sequence[float], grid: int = DEFAULT_GRID) -> tuple[list[int], float]:
    """Round probabilities onto the grid with largest-remainder rounding.

    The cell total is ``round(sum(probs) * grid)`` so an integer expected
    size maps to exactly ``n * grid`` cells.  Returns the cell counts and
    the largest absolute rounding residual ``|cells/G - p|``.
    """
    check_grid(grid)
    exact = [Fraction(p) for p in probs]
    for p in exact:
        if p < 0 or p > 1:
            raise DomainError(f"probability {float(p)} outside [0, 1]")
    scaled = [p * grid for p in exact]
    cells = [int(s) for s in scaled]  # floor, all non-negative
    target = round(sum(scaled))
    short = target - sum(cells)
    order = sorted(range(len(cells)), key=lambda k: (-(scaled[k] - cells[k]), k))
    for k in order[:short]:
        cells[k] += 1
    residual = max((abs(Fraction(c, grid) - p) for c, p in zip(cells, exact)), default=Fraction(0))
    return cells, float(residual)


@dataclass(frozen=True)
class IntervalSet:
    """Canonical union of half-open cell intervals within ``[0, grid)``.

    Adjacent or overlapping input intervals are merged on construction, so
    two sets covering the same cells compare equal.
    """

    intervals: tuple[tuple[int, int], ...]
    grid: int

    def __init__(self, intervals: Iterable[tuple[int, int]] = (), grid: int = DEFAULT_GRID):
        check_grid(grid)
        merged: list[list[int]] = []
        for a, b in sorted((int(a), int(b)) for a, b in intervals):
            if not 0 <= a < b <= grid:
                raise DomainError(f"interval [{a}, {b}) not inside [0, {grid})")
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        object.__setattr__(self, "intervals", tuple((a, b) for a, b in merged))
        object.__setattr__(self, "grid", grid)

    @classmethod
    def _trusted(cls, intervals: tuple[tuple[int, int], ...], grid: int) -> IntervalSet:
        # skips validation; callers guarantee canonical form
        obj = object.__new__(cls)
        object.__setattr__(obj, "intervals", intervals)
        object.__setattr__(obj, "grid", grid)
        return obj

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def measure(self) -> int:
        return sum(b - a for a, b in self.intervals)

    def _locate(self, point: int) -> int:
        """Index of the last interval starting at or before ``point`` (or -1)."""
        return bisect.bisect_right(self.intervals, (point, self.grid + 1)) - 1

    def contains(self, point: int) -> bool:
        if not 0 <= point < self.grid:
            raise DomainError(f"point {point} outside [0, {self.grid})")
        i = self._locate(point)
        return i >= 0 and point < self.intervals[i][1]

    def __contains__(self, point: int) -> bool:
        return self.contains(point)

    def covers_range(self, lo: int, hi: int) -> bool:
        """True iff ``[lo, hi)`` lies inside a single interval of the set."""
        self._check_range(lo, hi)
        i = self._locate(lo)
        return i >= 0 and hi <= self.intervals[i][1]

    def overlaps_range(self, lo: int, hi: int) -> bool:
        self._check_range(lo, hi)
        i = self._locate(lo)
        if i >= 0 and self.intervals[i][1] > lo:
            return True
        return i + 1 < len(self.intervals) and self.intervals[i + 1][0] < hi

    def remove_range(self, lo: int, hi: int) -> IntervalSet:
        if not self.covers_range(lo, hi):
            raise PreconditionError(f"[{lo}, {hi}) is not fully covered by {self.intervals}")
        i = self._locate(lo)
        a, b = self.intervals[i]
        pieces = tuple(p for p in ((a, lo), (hi, b)) if p[0] < p[1])
        return IntervalSet._trusted(self.intervals[:i] + pieces + self.intervals[i + 1:], self.grid)

    def insert_range(self, lo: int, hi: int) -> IntervalSet:
        if self.overlaps_range(lo, hi):
            raise PreconditionError(f"[{lo}, {hi}) overlaps {self.intervals}")
        i = self._locate(lo)  # interval i ends at or before lo
        left = self.intervals[: i + 1]
        right = self.intervals[i + 1:]
        if left and left[-1][1] == lo:
            lo = left[-1][0]
            left = left[:-1]
        if right and right[0][0] == hi:
            hi = right[0][1]
            right = right[1:]
        return IntervalSet._trusted(left + ((lo, hi),) + right, self.grid)

    def intersection_measure(self, other: IntervalSet) -> int:
        if other.grid != self.grid:
            raise DomainError(f"grid mismatch: {self.grid} vs {other.grid}")
        a, b = self.intervals, other.intervals
        i = j = total = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo < hi:
                total += hi - lo
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return total

    def _check_range(self, lo: int, hi: int) -> None:
        if not 0 <= lo < hi <= self.grid:
            raise DomainError(f"range [{lo}, {hi}) invalid for grid {self.grid}")


def intersection_measure(a: IntervalSet, b: IntervalSet) -> int:
    return a.intersection_measure(b)
