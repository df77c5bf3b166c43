"""Horvitz-Thompson estimation over enumerated designs.

Designs hold exact grid masses; estimates are real-valued, so everything
here works in double precision with ``cells / G`` probabilities.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .design import Design, Sample, second_order_from_design
from .exceptions import DomainError, InvariantError

Criterion = Literal["c1", "c2", "c3"]

#: relative agreement required between the two variance routes
VARIANCE_RTOL = 1e-9


@dataclass
class EstimateReport:
    total: float
    total_estimate: Optional[float]
    variance: float
    variance_estimate: Optional[float]
    c1: float
    c2: float
    c3: float

    def to_dict(self) -> dict:
        return asdict(self)


def _pi(fip, grid: Optional[int]) -> np.ndarray:
    pi = np.asarray(fip, dtype=float)
    return pi / grid if grid is not None else pi


def nht_total(sample: Sequence[int], values, fip, grid: Optional[int] = None) -> float:
    """Narain-Horvitz-Thompson total of ``values`` over a sample of 1-based ids.

    ``fip`` holds probabilities, or cell counts when ``grid`` is given.
    """
    values = np.asarray(values, dtype=float)
    pi = _pi(fip, grid)
    idx = np.asarray(sample, dtype=np.intp) - 1
    if len(idx) == 0:
        return 0.0
    if np.any(pi[idx] <= 0):
        bad = [int(k) + 1 for k in idx[pi[idx] <= 0]]
        raise DomainError(f"units {bad} have zero inclusion probability")
    return float(math.fsum(values[idx] / pi[idx]))


def _estimates(design: Design, values) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample NHT estimates and sample probabilities."""
    values = np.asarray(values, dtype=float)
    if len(values) != design.n_units:
        raise DomainError(f"{len(values)} values for {design.n_units} units")
    masses = dict(design.masses)
    fip = np.zeros(design.n_units)
    for s, m in masses.items():
        for k in s:
            fip[k - 1] += m
    pi = fip / design.grid
    zero = (pi == 0) & (values != 0)
    if np.any(zero):
        raise DomainError(f"units {list(np.flatnonzero(zero) + 1)} have zero inclusion probability but non-zero value")
    ratio = np.divide(values, pi, out=np.zeros_like(values), where=pi > 0)
    samples = sorted(masses)
    est = np.array([math.fsum(ratio[k - 1] for k in s) for s in samples])
    probs = np.array([masses[s] / design.grid for s in samples])
    return est, probs


def _eq2_variance(design: Design, values) -> float:
    values = np.asarray(values, dtype=float)
    sip = second_order_from_design(design) / design.grid
    pi = sip.diagonal()
    ratio = np.divide(values, pi, out=np.zeros_like(values), where=pi > 0)
    return float(ratio @ (sip - np.outer(pi, pi)) @ ratio)


def design_variance(design: Design, values) -> float:
    """Exact variance of the NHT total under ``design``.

    Computed as the expected squared error over the enumerated samples and
    again from the joint inclusion probabilities; the two must agree.
    """
    values = np.asarray(values, dtype=float)
    est, probs = _estimates(design, values)
    total = math.fsum(values)
    direct = math.fsum(((est - total) ** 2 * probs).tolist())
    via_sip = _eq2_variance(design, values)
    scale = math.fsum((est**2 * probs).tolist())
    if abs(direct - via_sip) > VARIANCE_RTOL * max(abs(direct), abs(via_sip), scale, 1e-300):
        raise InvariantError(f"variance routes disagree: {direct!r} vs {via_sip!r}")
    return max(direct, 0.0)


def _pair_terms(sample, values, pi, sip):
    idx = np.asarray(sample, dtype=np.intp) - 1
    if np.any(pi[idx] <= 0):
        raise DomainError("sample contains units with zero inclusion probability")
    sub = sip[np.ix_(idx, idx)]
    if np.any(sub <= 0):
        raise DomainError("a joint inclusion probability in the sample is zero; no unbiased variance estimator exists")
    check = np.asarray(values, dtype=float)[idx] / pi[idx]
    weight = (sub - np.outer(pi[idx], pi[idx])) / sub
    return check, weight


def variance_estimator_ht(sample, values, fip, sip, grid: Optional[int] = None) -> float:
    """Unbiased variance estimator given strictly positive joint probabilities."""
    pi, sip = _pi(fip, grid), _pi(sip, grid)
    if len(sample) == 0:
        return 0.0
    check, weight = _pair_terms(sample, values, pi, sip)
    return float(check @ weight @ check)


def variance_estimator_syg(sample, values, fip, sip, grid: Optional[int] = None) -> float:
    """Sen-Yates-Grundy estimator; only valid for fixed-size designs."""
    pi, sip = _pi(fip, grid), _pi(sip, grid)
    n = pi.sum()
    size_var = sip.sum() - n * n
    if abs(size_var) > 1e-9 * max(1.0, n * n):
        raise DomainError(f"design is not fixed-size (size variance {size_var:.3g})")
    if len(sample) == 0:
        return 0.0
    check, weight = _pair_terms(sample, values, pi, sip)
    diff = check[:, None] - check[None, :]
    # the pair weight here is (pi_k pi_l - pi_kl) / pi_kl, the negated HT weight
    return float(-0.5 * np.sum(diff**2 * weight))


def criterion(design: Design, z, which: Criterion = "c1") -> float:
    """Design criterion on the NHT estimate of the total of ``z``.

    c1: mean squared error, c2: mean absolute error, c3: worst-case error.
    """
    est, probs = _estimates(design, z)
    err = est - math.fsum(np.asarray(z, dtype=float))
    if which == "c1":
        return math.fsum((err**2 * probs).tolist())
    if which == "c2":
        return math.fsum((np.abs(err) * probs).tolist())
    if which == "c3":
        return float(np.max(np.abs(err[probs > 0])))
    raise DomainError(f"unknown criterion {which!r}")


def efficiency(baseline_variance: float, candidate_variance: float) -> float:
    """Variance ratio baseline / candidate; above 1 favours the candidate."""
    if baseline_variance < 0 or candidate_variance < 0:
        raise DomainError("variances must be non-negative")
    if candidate_variance == 0:
        return math.inf if baseline_variance > 0 else 1.0
    return baseline_variance / candidate_variance


def sip_variance(values, sip, fip=None) -> float:
    """NHT variance from a joint-probability matrix of any design."""
    sip = np.asarray(sip, dtype=float)
    pi = sip.diagonal() if fip is None else np.asarray(fip, dtype=float)
    values = np.asarray(values, dtype=float)
    ratio = np.divide(values, pi, out=np.zeros_like(values), where=pi > 0)
    return float(ratio @ (sip - np.outer(pi, pi)) @ ratio)


def estimate_report(design: Design, z, sample: Optional[Sample] = None) -> EstimateReport:
    z = np.asarray(z, dtype=float)
    sip = second_order_from_design(design)
    fip = sip.diagonal()
    report = EstimateReport(
        total=math.fsum(z),
        total_estimate=None,
        variance=design_variance(design, z),
        variance_estimate=None,
        c1=criterion(design, z, "c1"),
        c2=criterion(design, z, "c2"),
        c3=criterion(design, z, "c3"),
    )
    if sample is not None:
        report.total_estimate = nht_total(sample, z, fip, design.grid)
        # with a zero joint probability anywhere no unbiased estimator exists
        if np.all(sip > 0):
            estimator = variance_estimator_syg if design.is_fixed_size else variance_estimator_ht
            report.variance_estimate = estimator(sample, z, fip, sip, design.grid)
    return report
