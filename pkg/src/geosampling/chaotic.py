"""Entropy-increasing moves on a layout.

A move picks two elementary strips, carves a substrip of height
``floor(alpha * min(h_i, h_j))`` at the bottom of each, and relocates bar
segments between them:

* free move: one unit covering strip ``i`` but not ``j`` moves its segment
  from ``i`` to ``j`` (iterating this tends to Poisson sampling);
* fixed move: additionally a unit covering ``j`` but not ``i`` moves the
  other way, so every strip keeps its sample size (tends to conditional
  Poisson, the fixed-size maximum-entropy design).

Both preserve every unit's bar measure exactly.
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Literal, Optional, Union

import numpy as np

from .design import StripTable, mass_entropy, sweep
from .exceptions import DomainError, InvariantError
from .layout import BarLayout

Mode = Literal["free", "fixed"]
Alpha = Union[float, Fraction]


@dataclass(frozen=True)
class MoveParams:
    alpha: Alpha = 0.5
    iterations: int = 0
    seed: int = 0
    anchor: Literal["bottom", "random"] = "bottom"
    selection: Literal["uniform", "mass"] = "mass"
    unit_choice: Literal["symmetric", "literal"] = "symmetric"

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.iterations < 0:
            raise DomainError("iterations must be non-negative")
        if self.anchor not in ("bottom", "random"):
            raise DomainError(f"unknown anchor {self.anchor!r}")
        if self.selection not in ("uniform", "mass"):
            raise DomainError(f"unknown selection {self.selection!r}")
        if self.unit_choice not in ("symmetric", "literal"):
            raise DomainError(f"unknown unit choice {self.unit_choice!r}")

    @property
    def variant(self) -> dict:
        return {"anchor": self.anchor, "selection": self.selection, "unit_choice": self.unit_choice}


@dataclass(frozen=True)
class Move:
    """A planned relocation: unit ``k`` leaves ``[src, src+v)`` for
    ``[dst, dst+v)``; in a fixed move unit ``l`` travels the other way."""

    k: int
    l: Optional[int]
    src: int
    dst: int
    v: int


def _set_bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _pick(mask: int, rng: random.Random) -> int:
    bits = _set_bits(mask)
    return bits[rng.randrange(len(bits))]


def plan_move(bounds, mask_at, rng: random.Random, alpha: Alpha, fixed: bool,
              anchor: str = "bottom", selection: str = "mass",
              unit_choice: str = "symmetric") -> Optional[Move]:
    """Draw one move against a strip partition, or None when it is a no-op.

    ``bounds`` lists strip edges and ``mask_at`` maps each strip start to
    its sample bitmask.  Random draws happen in a fixed order (strips, units, anchors) so any two
    implementations consuming the plan agree stream-for-stream.  Bit indices
    in the returned move are 0-based.

    ``unit_choice="literal"`` draws ``k`` uniformly from ``s_i - s_j``.  In
    free mode that rule does not balance forward and reverse moves between
    samples of different sizes, and the chain settles away from Poisson
    sampling; ``"symmetric"`` instead draws ``k`` from the symmetric
    difference and moves it out of whichever strip holds it, which is
    reversible with respect to the Poisson design.  Fixed moves are already
    balanced, so both choices coincide there.
    """
    d = len(bounds) - 1
    if d < 2:
        return None
    if selection == "uniform":
        i = rng.randrange(d)
        j = rng.randrange(d - 1)
        if j >= i:
            j += 1
    else:
        grid = bounds[-1]
        i = bisect.bisect_right(bounds, rng.randrange(grid)) - 1
        j = i
        while j == i:
            j = bisect.bisect_right(bounds, rng.randrange(grid)) - 1
    hi = bounds[i + 1] - bounds[i]
    hj = bounds[j + 1] - bounds[j]
    v = math.floor(alpha * min(hi, hj))
    si, sj = mask_at[bounds[i]], mask_at[bounds[j]]
    if v == 0:
        return None
    l = None
    if fixed:
        leaving, entering = si & ~sj, sj & ~si
        if not leaving or not entering:
            return None
        k = _pick(leaving, rng)
        l = _pick(entering, rng)
    elif unit_choice == "symmetric":
        if si == sj:
            return None
        k = _pick(si ^ sj, rng)
        if not si >> k & 1:
            i, j, hi, hj = j, i, hj, hi
    else:
        leaving = si & ~sj
        if not leaving:
            return None
        k = _pick(leaving, rng)
    src, dst = bounds[i], bounds[j]
    if anchor == "random":
        src += rng.randint(0, hi - v)
        dst += rng.randint(0, hj - v)
    return Move(k, l, src, dst, v)


def apply_to_table(table: StripTable, move: Move) -> None:
    kb = 1 << move.k
    if move.l is None:
        table.toggle(move.src, move.src + move.v, kb, kb)
        table.toggle(move.dst, move.dst + move.v, kb, 0)
    else:
        bits = kb | (1 << move.l)
        table.toggle(move.src, move.src + move.v, bits, kb)
        table.toggle(move.dst, move.dst + move.v, bits, 1 << move.l)


def apply_to_layout(layout: BarLayout, move: Move) -> BarLayout:
    """Apply a move through interval-set removal and insertion."""
    bars = list(layout.bars)
    lo, hi = move.src, move.src + move.v
    dlo, dhi = move.dst, move.dst + move.v
    bars[move.k] = bars[move.k].remove_range(lo, hi).insert_range(dlo, dhi)
    if move.l is not None:
        bars[move.l] = bars[move.l].remove_range(dlo, dhi).insert_range(lo, hi)
    return BarLayout(layout.grid, tuple(bars), layout.fip)


def transfer(layout: BarLayout, unit: int, src: int, dst: int, v: int) -> BarLayout:
    """Explicit free move of 1-based ``unit`` from ``[src, src+v)`` to ``[dst, dst+v)``."""
    return apply_to_layout(layout, Move(unit - 1, None, src, dst, v))


def interchange(layout: BarLayout, k: int, l: int, src: int, dst: int, v: int) -> BarLayout:
    """Explicit fixed move: 1-based ``k`` goes ``src -> dst``, ``l`` goes ``dst -> src``."""
    return apply_to_layout(layout, Move(k - 1, l - 1, src, dst, v))


def free_move(layout: BarLayout, rng: random.Random, alpha: Alpha = 0.5, **variant) -> BarLayout:
    bounds, masks = sweep(layout)
    move = plan_move(bounds, dict(zip(bounds, masks)), rng, alpha, fixed=False, **variant)
    return layout if move is None else apply_to_layout(layout, move)


def fixed_move(layout: BarLayout, rng: random.Random, alpha: Alpha = 0.5, **variant) -> BarLayout:
    bounds, masks = sweep(layout)
    move = plan_move(bounds, dict(zip(bounds, masks)), rng, alpha, fixed=True, **variant)
    return layout if move is None else apply_to_layout(layout, move)


@dataclass
class TraceRow:
    move: int
    applied: int
    skipped: int
    entropy: float
    strips: int
    max_sip_gap: Optional[float] = None
    tv_to_oracle: Optional[float] = None


@dataclass
class Trace:
    mode: str
    rows: list[TraceRow] = field(default_factory=list)
    applied: int = 0
    skipped: int = 0

    COLUMNS = ("move", "applied", "skipped", "entropy", "strips", "max_sip_gap", "tv_to_oracle")


def sip_gap(table: StripTable) -> float:
    """max over pairs of |pi_kl - pi_k pi_l|, the distance from independence."""
    masses = table.mass_by_mask()
    n = table.n_units
    if n < 2:
        return 0.0
    weights = np.array(list(masses.values()), dtype=float) / table.grid
    bits = np.array([[m >> k & 1 for k in range(n)] for m in masses], dtype=float)
    sip = bits.T @ (bits * weights[:, None])
    pi = sip.diagonal().copy()
    gap = abs(sip - pi[:, None] * pi[None, :])
    gap[range(len(pi)), range(len(pi))] = 0.0
    return float(gap.max())


def run_chaotic(layout: BarLayout, params: MoveParams, mode: Mode = "free",
                checkpoints: int = 10, oracle=None,
                on_checkpoint: Optional[Callable[[int, StripTable], None]] = None,
                ) -> tuple[BarLayout, Trace]:
    """Apply ``params.iterations`` moves of the given kind.

    ``checkpoints`` evenly spaced trace rows are recorded (plus the start).
    ``oracle`` is an optional reference design; when given the trace
    carries the total-variation distance to it.  ``on_checkpoint`` is
    called with the move index and the live strip table at each checkpoint.
    """
    from .oracle import total_variation

    if mode not in ("free", "fixed"):
        raise DomainError(f"unknown mode {mode!r}")
    fixed = mode == "fixed"
    table = StripTable.from_layout(layout)
    if fixed and len({bin(m).count("1") for m in table.masks}) > 1:
        raise DomainError("fixed-size moves need a layout with constant sample size")
    rng = random.Random(params.seed)
    trace = Trace(mode)
    m_total = params.iterations
    marks = set()
    if checkpoints > 0 and m_total > 0:
        marks = {max(1, round(m_total * c / checkpoints)) for c in range(1, checkpoints + 1)}

    def record(m: int) -> None:
        masses = table.mass_by_mask()
        row = TraceRow(m, trace.applied, trace.skipped, mass_entropy(masses.values(), table.grid), len(table))
        if not fixed:
            row.max_sip_gap = sip_gap(table)
        if oracle is not None:
            row.tv_to_oracle = total_variation(table.design(), oracle)
        trace.rows.append(row)
        if on_checkpoint is not None:
            on_checkpoint(m, table)

    record(0)
    bounds, mask_at = table.bounds, table.mask_at
    alpha, anchor, selection = params.alpha, params.anchor, params.selection
    unit_choice = params.unit_choice
    for m in range(1, m_total + 1):
        move = plan_move(bounds, mask_at, rng, alpha, fixed, anchor, selection, unit_choice)
        if move is None:
            trace.skipped += 1
        else:
            apply_to_table(table, move)
            trace.applied += 1
        if m in marks:
            record(m)
    # BarLayout validation re-checks every bar measure against the fip
    return table.to_layout(), trace
