"""Brute-force reference designs in real arithmetic.

Poisson and conditional Poisson (fixed-size maximum entropy) designs are
enumerated exhaustively, so they only scale to small populations.  They
exist to check what the move kernels converge to.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .design import Design, Sample
from .exceptions import ConvergenceError, DomainError

MAX_POISSON_UNITS = 20
MAX_MAXENT_SAMPLES = 2_000_000


@dataclass(frozen=True)
class ReferenceDesign:
    probs: Mapping[Sample, float]
    n_units: int
    kind: str

    def __post_init__(self):
        total = math.fsum(self.probs.values())
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"reference probabilities sum to {total!r}")

    def first_order(self) -> np.ndarray:
        pi = np.zeros(self.n_units)
        for s, p in self.probs.items():
            for k in s:
                pi[k - 1] += p
        return pi

    def entropy(self) -> float:
        return -math.fsum(p * math.log(p) for p in self.probs.values() if p > 0)


def _as_probs(pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or np.any(pi < 0) or np.any(pi > 1):
        raise DomainError("inclusion probabilities must be a vector in [0, 1]")
    return pi


def poisson_design(pi: Sequence[float]) -> ReferenceDesign:
    """Independent inclusion of every unit."""
    pi = _as_probs(pi)
    n = len(pi)
    if n > MAX_POISSON_UNITS:
        raise DomainError(f"{n} units is too many to enumerate (max {MAX_POISSON_UNITS})")
    probs = {}
    for bits in itertools.product((0, 1), repeat=n):
        p = math.prod(q if b else 1.0 - q for q, b in zip(pi, bits))
        if p > 0:
            probs[tuple(k + 1 for k, b in enumerate(bits) if b)] = p
    # renormalize the rounding of the products
    total = math.fsum(probs.values())
    return ReferenceDesign({s: p / total for s, p in probs.items()}, n, "poisson")


def maxent_design(pi: Sequence[float], n: int | None = None, tol: float = 1e-10,
                  max_iter: int = 100_000) -> ReferenceDesign:
    """Conditional Poisson design with the given inclusion probabilities.

    ``p(s)`` is proportional to the product of unit weights over size-``n``
    samples.  Weights are found by iterative scaling: each weight is
    multiplied by ``target / current`` inclusion probability until the
    largest residual is at most ``tol``.  Units with probability 0 or 1 are
    excluded or forced before solving.
    """
    pi = _as_probs(pi)
    total = float(pi.sum())
    if n is None:
        n = round(total)
    if abs(total - n) > 1e-9:
        raise DomainError(f"inclusion probabilities sum to {total}, not the integer {n}")
    eps = 1e-12
    forced = [k for k in range(len(pi)) if pi[k] >= 1 - eps]
    free = [k for k in range(len(pi)) if eps < pi[k] < 1 - eps]
    m = n - len(forced)
    if not 0 <= m <= len(free):
        raise DomainError("inconsistent sample size for the degenerate units")
    if math.comb(len(free), m) > MAX_MAXENT_SAMPLES:
        raise DomainError(f"C({len(free)}, {m}) samples is too many to enumerate")

    combos = np.array(list(itertools.combinations(range(len(free)), m)), dtype=np.intp).reshape(-1, m)
    incidence = np.zeros((len(combos), len(free)))
    if m:
        np.put_along_axis(incidence, combos, 1.0, axis=1)
    target = pi[free]
    log_w = np.log(target / (1 - target)) if len(free) else np.zeros(0)

    def solve(log_w):
        log_p = incidence @ log_w
        p = np.exp(log_p - log_p.max())
        p /= p.sum()
        return p, incidence.T @ p

    residual = 0.0
    for _ in range(max_iter):
        p, current = solve(log_w)
        residual = float(np.max(np.abs(current - target))) if len(free) else 0.0
        if residual <= tol:
            break
        log_w += np.log(target) - np.log(current)
    else:
        raise ConvergenceError("iterative scaling did not converge", residual)

    head = tuple(k + 1 for k in forced)
    probs: dict[Sample, float] = {}
    for row, prob in zip(combos, p):
        if prob > 0:
            probs[tuple(sorted(head + tuple(free[c] + 1 for c in row)))] = float(prob)
    return ReferenceDesign(probs, len(pi), "maxent")


def srs_sip(n_units: int, n: int) -> np.ndarray:
    """Joint inclusion probabilities of simple random sampling without replacement."""
    if not 0 <= n <= n_units or n_units < 1:
        raise DomainError(f"sample size {n} impossible for population {n_units}")
    off = n * (n - 1) / (n_units * (n_units - 1)) if n_units > 1 else 0.0
    out = np.full((n_units, n_units), off)
    np.fill_diagonal(out, n / n_units)
    return out


def _probabilities(design: Union[Design, ReferenceDesign]) -> tuple[Mapping[Sample, float], int]:
    if isinstance(design, Design):
        return design.probabilities(), design.n_units
    return design.probs, design.n_units


def total_variation(a: Union[Design, ReferenceDesign], b: Union[Design, ReferenceDesign]) -> float:
    pa, na = _probabilities(a)
    pb, nb = _probabilities(b)
    if na != nb:
        raise DomainError(f"population sizes differ: {na} vs {nb}")
    support = set(pa) | set(pb)
    return 0.5 * math.fsum(abs(pa.get(s, 0.0) - pb.get(s, 0.0)) for s in support)
