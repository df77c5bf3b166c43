"""Bar layouts: one interval set per unit, each of measure equal to its
first-order inclusion probability."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .exceptions import DomainError, InvariantError
from .grid import DEFAULT_GRID, IntervalSet, check_grid, to_cells


@dataclass(frozen=True)
class BarLayout:
    grid: int
    bars: tuple[IntervalSet, ...]
    fip: tuple[int, ...]

    def __post_init__(self):
        check_grid(self.grid)
        if len(self.bars) != len(self.fip):
            raise DomainError("bars and fip differ in length")
        for k, (bar, target) in enumerate(zip(self.bars, self.fip)):
            if bar.grid != self.grid:
                raise DomainError(f"unit {k + 1}: bar grid {bar.grid} != {self.grid}")
            if bar.measure != target:
                raise InvariantError(f"unit {k + 1}: bar measure {bar.measure} != fip {target}")

    @property
    def n_units(self) -> int:
        return len(self.bars)

    @property
    def interval_count(self) -> int:
        return sum(len(bar) for bar in self.bars)

    def probabilities(self) -> np.ndarray:
        return np.asarray(self.fip, dtype=float) / self.grid

    @classmethod
    def from_intervals(cls, intervals: Sequence[Sequence[tuple[int, int]]], grid: int) -> BarLayout:
        bars = tuple(IntervalSet(iv, grid) for iv in intervals)
        return cls(grid, bars, tuple(bar.measure for bar in bars))


@dataclass
class Population:
    """Per-unit records: main variable ``y``, design auxiliary ``x`` and
    evaluation auxiliary ``z``.  Any of them may be absent."""

    y: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    ids: Optional[list[str]] = field(default=None)

    def __post_init__(self):
        lengths = set()
        for name in ("y", "x", "z"):
            values = getattr(self, name)
            if values is None:
                continue
            values = np.asarray(values, dtype=float)
            if values.ndim != 1:
                raise DomainError(f"{name} must be one-dimensional")
            if not np.all(np.isfinite(values)):
                raise DomainError(f"{name} contains non-finite values")
            setattr(self, name, values)
            lengths.add(len(values))
        if len(lengths) > 1:
            raise DomainError(f"variables differ in length: {sorted(lengths)}")
        if not lengths:
            raise DomainError("population has no variables")
        if self.ids is not None and len(self.ids) not in lengths:
            raise DomainError("ids length does not match variables")

    @property
    def n_units(self) -> int:
        for values in (self.y, self.x, self.z):
            if values is not None:
                return len(values)
        return 0


def pps_probabilities(x: Sequence[float], n: int) -> list[Fraction]:
    """Exact PPS inclusion probabilities ``min(c * x_k, 1)`` summing to ``n``.

    Saturated units are fixed at 1 and ``c`` is recomputed over the rest
    until no unit exceeds 1.
    """
    xs = [Fraction(v) for v in x]
    if n < 1 or int(n) != n:
        raise DomainError(f"sample size must be a positive integer, got {n}")
    n = int(n)
    if any(v < 0 for v in xs):
        raise DomainError("auxiliary values must be non-negative")
    positive = sum(1 for v in xs if v > 0)
    if n > len(xs) or positive < n:
        raise DomainError(f"n={n} infeasible: only {positive} units with x > 0")

    saturated: set[int] = set()
    while True:
        free = [k for k in range(len(xs)) if k not in saturated]
        if not free:
            c = Fraction(0)
            break
        c = Fraction(n - len(saturated)) / sum(xs[k] for k in free)
        newly = {k for k in free if c * xs[k] >= 1}
        if not newly:
            break
        saturated |= newly
    return [Fraction(1) if k in saturated else c * xs[k] for k in range(len(xs))]


def fip_from_aux(x: Sequence[float], n: int, grid: int = DEFAULT_GRID) -> list[int]:
    """PPS inclusion probabilities in cells; the total is exactly ``n * grid``."""
    check_grid(grid)
    return to_cells(pps_probabilities(x, n), grid)[0]


def _check_fip(fip: Sequence[int], grid: int) -> tuple[int, ...]:
    check_grid(grid)
    out = tuple(int(p) for p in fip)
    for k, p in enumerate(out):
        if not 0 <= p <= grid:
            raise DomainError(f"unit {k + 1}: fip {p} outside [0, {grid}]")
    return out


def layout_from_offsets(fip: Sequence[int], offsets: Sequence[int], grid: int = DEFAULT_GRID) -> BarLayout:
    """Contiguous bars ``[o_k, o_k + pi_k)`` at explicit offsets."""
    fip = _check_fip(fip, grid)
    if len(offsets) != len(fip):
        raise DomainError("offsets and fip differ in length")
    bars = []
    for p, o in zip(fip, offsets):
        if not 0 <= o <= grid - p:
            raise DomainError(f"offset {o} puts a bar of {p} cells outside the grid")
        bars.append(IntervalSet([(o, o + p)] if p else [], grid))
    return BarLayout(grid, tuple(bars), fip)


def random_layout(fip: Sequence[int], rng: random.Random, grid: int = DEFAULT_GRID) -> BarLayout:
    """Each bar is one interval with offset uniform on ``[0, G - pi_k]``."""
    fip = _check_fip(fip, grid)
    offsets = [rng.randint(0, grid - p) for p in fip]
    return layout_from_offsets(fip, offsets, grid)


def madow_layout(fip: Sequence[int], grid: int = DEFAULT_GRID) -> BarLayout:
    """Cumulative placement, wrapping around the top of the axis.

    With an integer total ``n * G`` every cell is covered by exactly ``n``
    bars, which makes the design fixed-size (systematic sampling).
    """
    fip = _check_fip(fip, grid)
    bars = []
    top = 0
    for p in fip:
        top %= grid
        if p == 0:
            bars.append(IntervalSet((), grid))
        elif top + p <= grid:
            bars.append(IntervalSet([(top, top + p)], grid))
        else:
            bars.append(IntervalSet([(top, grid), (0, top + p - grid)], grid))
        top += p
    return BarLayout(grid, tuple(bars), fip)
