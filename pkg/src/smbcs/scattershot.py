"""Success probability and photon-number statistics of a scattershot bank.

A sample succeeds when at least N of the ceil(a*N) sources deliver a photon.
With per-source delivery probability p the success probability is the
binomial tail

    P = sum_{j=N}^{ceil(aN)} C(ceil(aN), j) p^j (1-p)^(ceil(aN)-j)
      = I_p(N, ceil(aN) - N + 1),

the regularized incomplete beta function.  Both routes are implemented
independently (log-space binomial sum, continued-fraction beta) and every
analytic evaluation cross-checks them against each other.  For a > 1/p the
binomial mean ceil(aN)*p outruns N, so P -> 1 as N grows.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericGuardError
from .sources import (
    SpdcSource,
    bank_delivery_counts,
    bank_photon_totals,
    delivery_probability,
)

__all__ = [
    "ExperimentPlan",
    "SuccessCurve",
    "regularized_incomplete_beta",
    "binomial_tail_probability",
    "success_probability_analytic",
    "success_probability_mc",
    "asymptotic_threshold",
    "total_photon_statistics",
    "total_photons_mc",
    "compute_success_curve",
]

_ROUTE_AGREEMENT = 1e-10


@dataclass(frozen=True)
class ExperimentPlan:
    """Target photon number N, source multiplier a and the source design."""

    n_photons: int
    source_multiplier: float
    source: SpdcSource

    def __post_init__(self):
        if self.n_photons < 1:
            raise DomainError(f"target photon number must be >= 1, got {self.n_photons}")
        if not (self.source_multiplier > 0):
            raise DomainError(f"source multiplier must be positive, got {self.source_multiplier}")

    @property
    def n_sources(self) -> int:
        return math.ceil(self.source_multiplier * self.n_photons)


@dataclass
class SuccessCurve:
    """Success probability as a function of N for fixed bank parameters."""

    points: list[tuple[int, float]]
    source_multiplier: float
    gamma: float
    inner_modes: int
    mode: str  # "feed_forward" or "no_feed_forward"
    metadata: dict = field(default_factory=dict)


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Lentz evaluation of the continued fraction for the incomplete beta."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 500):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise NumericGuardError(f"incomplete beta continued fraction failed to converge "
                            f"for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b) via the continued fraction with symmetry reduction."""
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if a <= 0 or b <= 0:
        raise DomainError("shape parameters must be positive")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    # Use the expansion on whichever side converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def binomial_tail_probability(n_trials: int, n_min: int, p: float) -> float:
    """P(at least n_min successes in n_trials Bernoulli(p) trials), in log space."""
    if n_trials < 0 or n_min < 0:
        raise DomainError("counts must be non-negative")
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if n_min > n_trials:
        return 0.0
    if n_min == 0:
        return 1.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    log_p, log_q = math.log(p), math.log1p(-p)
    log_terms = [
        (math.lgamma(n_trials + 1) - math.lgamma(j + 1) - math.lgamma(n_trials - j + 1)
         + j * log_p + (n_trials - j) * log_q)
        for j in range(n_min, n_trials + 1)
    ]
    peak = max(log_terms)
    return math.exp(peak) * math.fsum(math.exp(t - peak) for t in log_terms)


def success_probability_analytic(plan: ExperimentPlan) -> float:
    """Probability of delivering at least N photons from the bank.

    Evaluates the binomial tail and the incomplete-beta identity and insists
    they agree to 1e-10 before returning the beta value.
    """
    p = delivery_probability(plan.source)
    n_src = plan.n_sources
    n = plan.n_photons
    if n_src < n:
        warnings.warn(f"bank of {n_src} sources can never deliver {n} photons", stacklevel=2)
        return 0.0
    tail = binomial_tail_probability(n_src, n, p)
    if p == 0.0:
        beta = 0.0
    elif p == 1.0:
        beta = 1.0
    else:
        beta = regularized_incomplete_beta(p, n, n_src - n + 1)
    if abs(tail - beta) > _ROUTE_AGREEMENT:
        raise NumericGuardError(f"binomial tail {tail!r} and incomplete beta {beta!r} disagree")
    return beta


def success_probability_mc(plan: ExperimentPlan, trials: int,
                           rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate of the success probability with its standard error."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    counts = bank_delivery_counts(plan.source, plan.n_sources, trials, rng)
    successes = int(np.count_nonzero(counts >= plan.n_photons))
    estimate = successes / trials
    stderr = math.sqrt(estimate * (1.0 - estimate) / trials)
    return estimate, stderr


def asymptotic_threshold(source: SpdcSource) -> float:
    """Source multiplier above which success approaches certainty, 1/p."""
    p = delivery_probability(source)
    if p <= 0.0:
        raise DomainError("delivery probability is zero; no multiplier suffices")
    return 1.0 / p


def total_photon_statistics(plan: ExperimentPlan) -> tuple[float, float]:
    """Mean and standard deviation of the bank's total emitted photon number.

    Each inner mode contributes a geometric pair count with mean
    gamma^2/(1-gamma^2); the bank total over ceil(aN)*k independent modes has
    mean ceil(aN)*k*gamma^2/(1-gamma^2) and standard deviation
    sqrt(ceil(aN)*k)*gamma/(1-gamma^2).
    """
    gamma = plan.source.gamma
    g2 = gamma * gamma
    modes = plan.n_sources * plan.source.inner_modes
    mean = modes * g2 / (1.0 - g2)
    std = math.sqrt(modes) * gamma / (1.0 - g2)
    return mean, std


def total_photons_mc(plan: ExperimentPlan, trials: int,
                     rng: np.random.Generator) -> tuple[float, float]:
    """Sample mean and standard deviation of the bank's total photon number."""
    totals = bank_photon_totals(plan.source, plan.n_sources, trials, rng)
    return float(totals.mean()), float(totals.std(ddof=1))


def compute_success_curve(source: SpdcSource, source_multiplier: float,
                          n_values) -> SuccessCurve:
    """Analytic success probability over a range of target photon numbers."""
    points = []
    for n in n_values:
        plan = ExperimentPlan(int(n), source_multiplier, source)
        points.append((int(n), success_probability_analytic(plan)))
    mode = "feed_forward" if source.feed_forward else "no_feed_forward"
    return SuccessCurve(points, source_multiplier, source.gamma, source.inner_modes, mode)
