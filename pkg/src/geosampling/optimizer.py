"""Greedy best-first search for low-variance fixed-size layouts.

Starting from the cumulative (systematic) layout, each iteration expands
the cheapest open node: ``nodes_per_iteration`` children are produced by
fixed-size moves, scored with a design criterion on the evaluation
variable, and pushed into a bounded open set.  Expanded designs go to a
closed set of digests so no design is expanded twice.
"""

from __future__ import annotations

import bisect
import hashlib
import itertools
import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chaotic import apply_to_table, plan_move
from .design import Design, StripTable, sample_to_mask
from .estimator import Criterion
from .exceptions import DomainError
from .layout import BarLayout, Population, madow_layout


@dataclass(frozen=True)
class SearchParams:
    iterations: int = 500
    nodes_per_iteration: int = 20
    max_open_set_size: int = 100
    moves_per_candidate: int = 1
    alpha: float = 1.0
    criterion: Criterion = "c1"
    seed: int = 0
    workers: int = 1
    selection: str = "mass"
    anchor: str = "bottom"

    def __post_init__(self):
        for name in ("iterations", "nodes_per_iteration", "max_open_set_size", "moves_per_candidate", "workers"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be at least 1")
        if not 0 < self.alpha <= 1:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.criterion not in ("c1", "c2", "c3"):
            raise DomainError(f"unknown criterion {self.criterion!r}")


def _key_from_masses(mass_by_mask: dict[int, int]) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    for mask, mass in sorted(mass_by_mask.items()):
        h.update(mask.to_bytes((mask.bit_length() + 8) // 8, "little"))
        h.update(b"|")
        h.update(mass.to_bytes(16, "little"))
        h.update(b";")
    return h.digest()


def design_key(design: Design) -> bytes:
    """128-bit digest of the aggregated design (samples and masses)."""
    return _key_from_masses({sample_to_mask(s): m for s, m in design.masses.items()})


@dataclass
class SearchNode:
    table: StripTable
    key: bytes
    cost: float

    @property
    def layout(self) -> BarLayout:
        return self.table.to_layout()


class _Scorer:
    """Criterion of a strip table, memoising per-sample estimates."""

    def __init__(self, z: np.ndarray, fip: Sequence[int], grid: int, which: Criterion):
        pi = np.asarray(fip, dtype=float) / grid
        zero = (pi == 0) & (z != 0)
        if np.any(zero):
            raise DomainError(f"units {list(np.flatnonzero(zero) + 1)} have zero inclusion probability but non-zero z")
        self.ratio = np.divide(z, pi, out=np.zeros_like(z), where=pi > 0).tolist()
        self.total = math.fsum(z)
        self.grid = grid
        self.which = which
        self.memo: dict[int, float] = {}

    def error(self, mask: int) -> float:
        err = self.memo.get(mask)
        if err is None:
            parts = []
            k = 0
            m = mask
            while m:
                if m & 1:
                    parts.append(self.ratio[k])
                m >>= 1
                k += 1
            err = self.memo[mask] = math.fsum(parts) - self.total
        return err

    def __call__(self, masses: dict[int, int]) -> float:
        g = self.grid
        if self.which == "c1":
            return math.fsum(m * self.error(mask) ** 2 for mask, m in masses.items()) / g
        if self.which == "c2":
            return math.fsum(m * abs(self.error(mask)) for mask, m in masses.items()) / g
        return max(abs(self.error(mask)) for mask, m in masses.items() if m > 0)


@dataclass
class SearchReport:
    best: SearchNode
    initial_cost: float
    trajectory: list[float] = field(default_factory=list)
    expanded: int = 0
    duplicates: int = 0
    evicted: int = 0
    early_stop: bool = False
    wall_time: float = 0.0
    open_sizes: list[int] = field(default_factory=list)
    expanded_keys: list[bytes] = field(default_factory=list)

    @property
    def best_cost(self) -> float:
        return self.best.cost

    @property
    def best_layout(self) -> BarLayout:
        return self.best.layout

    @property
    def efficiency(self) -> float:
        if self.best.cost == 0:
            return math.inf if self.initial_cost > 0 else 1.0
        return self.initial_cost / self.best.cost


def candidate_rng(seed: int, iteration: int, index: int) -> random.Random:
    """Independent stream per (iteration, candidate), so expansion order or
    worker count cannot change the result."""
    state = np.random.SeedSequence(seed, spawn_key=(iteration, index)).generate_state(4, np.uint32)
    return random.Random(int.from_bytes(state.tobytes(), "little"))


def search(population: Population | np.ndarray, fip: Sequence[int], params: SearchParams,
           grid: int) -> SearchReport:
    """Best-first search over fixed-size layouts with the given first-order masses.

    ``population`` supplies the evaluation variable ``z`` (an array is taken
    as ``z`` directly).
    """
    z = population.z if isinstance(population, Population) else population
    if z is None:
        raise DomainError("search needs an evaluation variable z")
    z = np.asarray(z, dtype=float)
    fip = list(fip)
    if len(z) != len(fip):
        raise DomainError(f"{len(z)} z values for {len(fip)} units")
    if sum(fip) % grid:
        raise DomainError("fixed-size search needs an integer expected sample size")

    started = time.perf_counter()
    scorer = _Scorer(z, fip, grid, params.criterion)

    def make_node(table: StripTable) -> SearchNode:
        masses = table.mass_by_mask()
        return SearchNode(table, _key_from_masses(masses), scorer(masses))

    def child(parent: SearchNode, iteration: int, index: int) -> SearchNode:
        rng = candidate_rng(params.seed, iteration, index)
        table = parent.table.copy()
        for _ in range(params.moves_per_candidate):
            move = plan_move(table.bounds, table.mask_at, rng, params.alpha, True,
                             params.anchor, params.selection)
            if move is not None:
                apply_to_table(table, move)
        return make_node(table)

    root = make_node(StripTable.from_layout(madow_layout(fip, grid)))
    report = SearchReport(best=root, initial_cost=root.cost, trajectory=[root.cost])
    counter = itertools.count()
    open_set: list[tuple[float, int, SearchNode]] = [(root.cost, next(counter), root)]
    closed: set[bytes] = set()
    pool = ThreadPoolExecutor(params.workers) if params.workers > 1 else None
    try:
        for iteration in range(params.iterations):
            while open_set and open_set[0][2].key in closed:
                open_set.pop(0)
            if not open_set:
                report.early_stop = True
                break
            current = open_set.pop(0)[2]
            indices = range(params.nodes_per_iteration)
            if pool is None:
                children = [child(current, iteration, i) for i in indices]
            else:
                children = list(pool.map(lambda i: child(current, iteration, i), indices))
            for node in children:
                if node.key in closed:
                    report.duplicates += 1
                    continue
                if node.cost < report.best.cost:
                    report.best = node
                entry = (node.cost, next(counter), node)
                if len(open_set) < params.max_open_set_size:
                    bisect.insort(open_set, entry, key=lambda e: (e[0], e[1]))
                else:
                    report.evicted += 1
                    if entry[0] < open_set[-1][0]:
                        open_set.pop()
                        bisect.insort(open_set, entry, key=lambda e: (e[0], e[1]))
            closed.add(current.key)
            report.expanded += 1
            report.expanded_keys.append(current.key)
            report.trajectory.append(report.best.cost)
            report.open_sizes.append(len(open_set))
    finally:
        if pool is not None:
            pool.shutdown()
    report.wall_time = time.perf_counter() - started
    return report
