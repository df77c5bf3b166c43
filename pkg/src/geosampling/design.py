"""Probability law induced by a bar layout.

A horizontal sweep over all bar endpoints partitions ``[0, G)`` into
elementary strips; every bar either covers a strip fully or misses it.  The
strip heights are sample probabilities, and summing equal samples gives the
design.  Samples are sorted tuples of 1-based unit ids.
"""

from __future__ import annotations

import bisect
import math
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .exceptions import DomainError, InvariantError
from .grid import IntervalSet
from .layout import BarLayout

Sample = tuple[int, ...]


def mask_to_sample(mask: int) -> Sample:
    ids = []
    k = 1
    while mask:
        if mask & 1:
            ids.append(k)
        mask >>= 1
        k += 1
    return tuple(ids)


def sample_to_mask(sample) -> int:
    mask = 0
    for k in sample:
        mask |= 1 << (k - 1)
    return mask


@dataclass(frozen=True)
class Strip:
    lo: int
    hi: int
    sample: Sample

    @property
    def height(self) -> int:
        return self.hi - self.lo


@dataclass(frozen=True)
class Design:
    """Mapping from sample to grid mass; masses sum to ``grid``."""

    masses: Mapping[Sample, int]
    grid: int
    n_units: int

    def __post_init__(self):
        if not self.masses:
            raise DomainError("empty design")
        total = sum(self.masses.values())
        if total != self.grid:
            raise InvariantError(f"design masses sum to {total}, expected {self.grid}")

    def __iter__(self) -> Iterator[tuple[Sample, int]]:
        return iter(sorted(self.masses.items()))

    def __len__(self) -> int:
        return len(self.masses)

    def probabilities(self) -> dict[Sample, float]:
        return {s: m / self.grid for s, m in sorted(self.masses.items())}

    def sizes(self) -> set[int]:
        return {len(s) for s in self.masses}

    @property
    def is_fixed_size(self) -> bool:
        return len(self.sizes()) == 1

    def expected_size(self) -> float:
        return sum(len(s) * m for s, m in self.masses.items()) / self.grid

    def size_variance(self) -> float:
        g = self.grid
        m1 = sum(len(s) * m for s, m in self.masses.items())
        m2 = sum(len(s) ** 2 * m for s, m in self.masses.items())
        # exact in integers before the final division
        return (m2 * g - m1 * m1) / (g * g)


def sweep(layout: BarLayout) -> tuple[list[int], list[int]]:
    """Elementary strip boundaries and unit bitmasks.

    Returns ``bounds`` (length D+1, from 0 to G) and ``masks`` (length D);
    bit ``k-1`` of ``masks[t]`` is set iff unit ``k`` covers strip ``t``.
    """
    events: dict[int, int] = defaultdict(int)
    for k, bar in enumerate(layout.bars):
        bit = 1 << k
        for a, b in bar:
            events[a] ^= bit
            events[b] ^= bit
    events.setdefault(0, 0)
    positions = sorted(events)
    bounds = positions if positions[-1] == layout.grid else positions + [layout.grid]
    masks = []
    mask = 0
    for pos in bounds[:-1]:
        mask ^= events[pos]
        masks.append(mask)
    return bounds, masks


def strips(layout: BarLayout) -> list[Strip]:
    bounds, masks = sweep(layout)
    return [Strip(bounds[t], bounds[t + 1], mask_to_sample(m)) for t, m in enumerate(masks)]


def aggregate(strip_seq: Sequence[Strip], grid: int | None = None, n_units: int | None = None) -> Design:
    if not strip_seq:
        raise DomainError("no strips to aggregate")
    pos = 0
    masses: dict[Sample, int] = defaultdict(int)
    for s in strip_seq:
        if s.lo != pos or s.hi <= s.lo:
            raise DomainError(f"strips do not partition the axis at {pos}")
        masses[s.sample] += s.height
        pos = s.hi
    if grid is not None and pos != grid:
        raise DomainError(f"strips end at {pos}, not {grid}")
    if n_units is None:
        n_units = max((max(s) for s in masses if s), default=0)
    return Design(dict(masses), pos, n_units)


def design_of(layout: BarLayout) -> Design:
    bounds, masks = sweep(layout)
    return _design_from_masks(bounds, masks, layout.grid, layout.n_units)


def _design_from_masks(bounds, masks, grid, n_units) -> Design:
    by_mask: dict[int, int] = defaultdict(int)
    for t, m in enumerate(masks):
        by_mask[m] += bounds[t + 1] - bounds[t]
    return Design({mask_to_sample(m): w for m, w in by_mask.items()}, grid, n_units)


def first_order(source: Union[Design, BarLayout]) -> list[int]:
    """Inclusion mass of every unit, in cells."""
    if isinstance(source, BarLayout):
        source = design_of(source)
    if not source.masses:
        raise DomainError("empty design")
    fip = [0] * source.n_units
    for sample, mass in source.masses.items():
        for k in sample:
            fip[k - 1] += mass
    return fip


def second_order(layout: BarLayout) -> np.ndarray:
    """Joint inclusion masses as the overlap of bars (integer matrix)."""
    n = layout.n_units
    out = np.zeros((n, n), dtype=np.int64)
    for k in range(n):
        out[k, k] = layout.fip[k]
        for l in range(k + 1, n):
            out[k, l] = out[l, k] = layout.bars[k].intersection_measure(layout.bars[l])
    return out


def second_order_from_design(design: Design) -> np.ndarray:
    n = design.n_units
    out = np.zeros((n, n), dtype=np.int64)
    for sample, mass in design.masses.items():
        idx = np.asarray(sample, dtype=np.intp) - 1
        out[np.ix_(idx, idx)] += mass
    return out


def entropy(design: Design) -> float:
    """Shannon entropy in nats."""
    return mass_entropy(design.masses.values(), design.grid)


def mass_entropy(masses: Iterable[int], grid: int) -> float:
    return -math.fsum((m / grid) * math.log(m / grid) for m in masses if m > 0)


def draw_cell(layout: BarLayout, cell: int) -> Sample:
    return tuple(k + 1 for k, bar in enumerate(layout.bars) if bar.contains(cell))


def draw_sample(layout: BarLayout, rng: random.Random) -> Sample:
    """Random line: a uniform cell selects every unit whose bar contains it."""
    return draw_cell(layout, rng.randrange(layout.grid))


class StripTable:
    """Mutable strip partition used by the move kernels.

    Holds the same information as a layout (a bar is the union of the strips
    whose mask has its bit) in the form the moves need: strips addressable
    by index, with O(log D) location and local split/merge on update.
    Adjacent strips never share a mask, so the table always equals
    ``sweep`` of the layout it represents.
    """

    __slots__ = ("bounds", "mask_at", "grid", "fip", "n_units")

    def __init__(self, bounds: list[int], masks: list[int], grid: int, fip: Sequence[int]):
        self.bounds = bounds
        # keyed by strip start so splits only shift one list
        self.mask_at = dict(zip(bounds, masks))
        self.grid = grid
        self.fip = tuple(fip)
        self.n_units = len(self.fip)

    @classmethod
    def from_layout(cls, layout: BarLayout) -> StripTable:
        bounds, masks = sweep(layout)
        return cls(bounds, masks, layout.grid, layout.fip)

    def copy(self) -> StripTable:
        twin = StripTable.__new__(StripTable)
        twin.bounds, twin.mask_at = self.bounds.copy(), self.mask_at.copy()
        twin.grid, twin.fip, twin.n_units = self.grid, self.fip, self.n_units
        return twin

    @property
    def masks(self) -> list[int]:
        at = self.mask_at
        return [at[lo] for lo in self.bounds[:-1]]

    def __len__(self) -> int:
        return len(self.bounds) - 1

    def strip(self, t: int) -> Strip:
        lo = self.bounds[t]
        return Strip(lo, self.bounds[t + 1], mask_to_sample(self.mask_at[lo]))

    def heights(self) -> list[int]:
        b = self.bounds
        return [b[t + 1] - b[t] for t in range(len(b) - 1)]

    def locate(self, cell: int) -> int:
        return bisect.bisect_right(self.bounds, cell) - 1

    def toggle(self, lo: int, hi: int, bits: int, expect: int) -> None:
        """Flip ``bits`` on ``[lo, hi)``, which must lie inside one strip.

        ``expect`` is the required current value of ``mask & bits``; a
        mismatch means a move tried to remove uncovered or insert into
        occupied space.
        """
        bounds, at = self.bounds, self.mask_at
        t = bisect.bisect_right(bounds, lo) - 1
        start, end = bounds[t], bounds[t + 1]
        if hi > end:
            raise InvariantError(f"range [{lo}, {hi}) spans strips at {end}")
        old = at[start]
        if old & bits != expect:
            raise InvariantError(f"range [{lo}, {hi}) has mask {old:#x}, expected {expect:#x} under {bits:#x}")
        new = old ^ bits
        if hi < end:
            bounds.insert(t + 1, hi)
            at[hi] = old
        if lo > start:
            bounds.insert(t + 1, lo)
            t += 1
        at[lo] = new
        # merge with neighbours sharing the new mask
        if t + 2 < len(bounds) and at[bounds[t + 1]] == new:
            del at[bounds[t + 1]]
            del bounds[t + 1]
        if t > 0 and at[bounds[t - 1]] == new:
            del at[lo]
            del bounds[t]

    def design(self) -> Design:
        return _design_from_masks(self.bounds, self.masks, self.grid, self.n_units)

    def mass_by_mask(self) -> dict[int, int]:
        out: dict[int, int] = defaultdict(int)
        b, at = self.bounds, self.mask_at
        for lo, hi in zip(b, b[1:]):
            out[at[lo]] += hi - lo
        return out

    def to_layout(self) -> BarLayout:
        pieces: list[list[tuple[int, int]]] = [[] for _ in range(self.n_units)]
        b = self.bounds
        for t, m in enumerate(self.masks):
            k = 0
            while m:
                if m & 1:
                    iv = pieces[k]
                    if iv and iv[-1][1] == b[t]:
                        iv[-1] = (iv[-1][0], b[t + 1])
                    else:
                        iv.append((b[t], b[t + 1]))
                m >>= 1
                k += 1
        bars = tuple(IntervalSet._trusted(tuple(iv), self.grid) for iv in pieces)
        return BarLayout(self.grid, bars, self.fip)
