"""End-to-end sampling pipeline and its brute-force oracles.

One drawn sample realizes the source bank (which ports fired, which inner
modes they heralded into), then draws a detection outcome from the exact
conditional distribution.  Exact output sampling is only offered while the
brute-force enumeration is affordable; beyond the guards the honest interface
is evaluating probabilities of caller-specified outcomes, not sampling.

The detection bins form a single global grid covering the union of all input
envelope supports; every support must be partitioned exactly by the grid so
that the discretized single-photon states stay unit norm, which is what makes
the enumerated distribution sum to one.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .correlations import (
    DetectionMode,
    DetectionOutcome,
    InputConfiguration,
    outcome_probability,
)
from .errors import CostGuardError, DomainError, NumericGuardError
from .interferometer import Interferometer, haar_random
from .scattershot import ExperimentPlan, success_probability_analytic
from .sources import Flavor, InnerModeGrid, delivery_probability, emit, herald_distribution
from .spectra import SpectralShape

__all__ = [
    "SampleRecord",
    "OutcomeDistribution",
    "DetectionGrid",
    "detection_grid",
    "brute_force_distribution",
    "total_variation_distance",
    "ConditionalOutcomeSampler",
    "draw_sample",
    "expected_sample_distribution",
    "GaussianEntryReport",
    "gaussian_entry_diagnostics",
]

BRUTE_FORCE_MAX_PHOTONS = 3
BRUTE_FORCE_MAX_PORTS = 6
BRUTE_FORCE_MAX_BINS = 12

_GRID_ALIGN_RTOL = 1e-9
_TOTAL_TOL = 1e-6


@dataclass(frozen=True)
class SampleRecord:
    """One complete draw: realized inputs, detection outcome, bookkeeping."""

    input_ports: tuple[int, ...]
    inner_mode_indices: tuple[int, ...]
    inner_modes: tuple
    outcome: DetectionOutcome | None
    probability: float | None
    n_tot: int
    failed: bool
    failure_reason: str | None = None


@dataclass
class OutcomeDistribution:
    """Exhaustive (outcome, probability) table; totals must reach 1."""

    outcomes: list[tuple[DetectionOutcome, float]]
    total: float

    def __post_init__(self):
        keys = set()
        for outcome, _ in self.outcomes:
            key = outcome.key()
            if key in keys:
                raise DomainError(f"duplicate outcome {key}")
            keys.add(key)
        if abs(self.total - 1.0) > _TOTAL_TOL:
            raise NumericGuardError(f"outcome distribution total {self.total!r} is not 1")

    def as_dict(self) -> dict:
        return {outcome.key(): p for outcome, p in self.outcomes}


@dataclass(frozen=True)
class DetectionGrid:
    """Uniform bin grid over the union of the input envelope supports."""

    mode: DetectionMode
    origin: float
    bin_width: float
    n_bins: int

    def centers(self) -> np.ndarray:
        return self.origin + (np.arange(self.n_bins) + 0.5) * self.bin_width

    def center(self, index: int) -> float:
        return self.origin + (index + 0.5) * self.bin_width

    def index_of(self, value: float) -> int:
        idx = int(round((value - self.origin) / self.bin_width - 0.5))
        if not (0 <= idx < self.n_bins):
            raise DomainError(f"value {value} outside detection grid")
        return idx


def _support(mode, detection: DetectionMode) -> tuple[float, float]:
    if detection is DetectionMode.TIME_RESOLVED:
        if mode.shape is not SpectralShape.RECTANGULAR_TEMPORAL:
            raise DomainError("time-resolved grid needs rectangular-temporal envelopes")
        return mode.time_support()
    if mode.shape is not SpectralShape.RECTANGULAR_FREQUENCY:
        raise DomainError("frequency-resolved grid needs rectangular-frequency envelopes")
    return mode.frequency_support()


def detection_grid(inputs: InputConfiguration, mode: DetectionMode,
                   bin_width: float) -> DetectionGrid:
    """Build the global bin grid for an input configuration.

    Every photon's envelope support must start on a grid edge and span an
    integer number of bins, otherwise the discretized envelopes are not unit
    norm and enumeration cannot reach total probability one.
    """
    if not (bin_width > 0):
        raise DomainError("bin width must be positive")
    supports = [_support(m, mode) for m in inputs.modes]
    origin = min(lo for lo, _ in supports)
    end = max(hi for _, hi in supports)
    scale = max(abs(origin), abs(end), bin_width)
    for lo, hi in supports:
        for edge in (lo, hi):
            steps = (edge - origin) / bin_width
            if abs(steps - round(steps)) > _GRID_ALIGN_RTOL * max(1.0, abs(steps)):
                raise DomainError(
                    f"envelope edge {edge!r} does not fall on the bin grid "
                    f"(origin {origin!r}, bin width {bin_width!r}); align central "
                    "values and widths to integer multiples of the bin width")
    n_bins_f = (end - origin) / bin_width
    n_bins = int(round(n_bins_f))
    if abs(n_bins_f - n_bins) > _GRID_ALIGN_RTOL * max(1.0, n_bins_f) or n_bins < 1:
        raise DomainError(f"grid span {end - origin!r} is not a multiple of bin width")
    del scale
    return DetectionGrid(mode, origin, bin_width, n_bins)


def brute_force_distribution(interf: Interferometer, inputs: InputConfiguration,
                             mode: DetectionMode, bin_width: float,
                             max_photons: int = BRUTE_FORCE_MAX_PHOTONS,
                             max_ports: int = BRUTE_FORCE_MAX_PORTS,
                             max_bins: int = BRUTE_FORCE_MAX_BINS) -> OutcomeDistribution:
    """Enumerate every (port multiset x bin assignment) outcome exactly.

    Serves as the oracle for total-variation tests and as the inverse-CDF
    table for exact sampling.  Guarded: the outcome count grows like
    C(M*B + N - 1, N).
    """
    n = inputs.n_photons
    m = interf.dimension
    if n > max_photons:
        raise CostGuardError(f"brute force refuses N={n} > {max_photons}")
    if m > max_ports:
        raise CostGuardError(f"brute force refuses M={m} > {max_ports}")
    grid = detection_grid(inputs, mode, bin_width)
    if grid.n_bins > max_bins:
        raise CostGuardError(f"brute force refuses {grid.n_bins} bins > {max_bins}")
    centers = grid.centers()
    cells = [(port, float(centers[b])) for port in range(m) for b in range(grid.n_bins)]
    outcomes: list[tuple[DetectionOutcome, float]] = []
    running = 0.0
    for combo in itertools.combinations_with_replacement(cells, n):
        ports = tuple(c[0] for c in combo)
        values = tuple(c[1] for c in combo)
        outcome = DetectionOutcome(mode, ports, values, bin_width)
        p = outcome_probability(interf, inputs, outcome, resolution_policy="ignore")
        outcomes.append((outcome, p))
        running += p
    return OutcomeDistribution(outcomes, running)


def total_variation_distance(p: dict, q: dict) -> float:
    """Half the L1 distance between two discrete distributions over any keys."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


class ConditionalOutcomeSampler:
    """Caches brute-force outcome tables keyed by realized input configurations.

    A scattershot run revisits the same (ports, inner modes) configurations
    many times; the exact conditional distribution of each is computed once.
    """

    def __init__(self, interf: Interferometer, grid: InnerModeGrid, bin_width: float,
                 max_photons: int = BRUTE_FORCE_MAX_PHOTONS,
                 max_ports: int = BRUTE_FORCE_MAX_PORTS,
                 max_bins: int = BRUTE_FORCE_MAX_BINS):
        self.interf = interf
        self.grid = grid
        self.bin_width = bin_width
        self.detection_mode = (DetectionMode.TIME_RESOLVED if grid.flavor is Flavor.RFM
                               else DetectionMode.FREQUENCY_RESOLVED)
        self.guards = (max_photons, max_ports, max_bins)
        self._tables: dict[tuple, tuple[list, np.ndarray]] = {}

    def _inputs_for(self, ports: tuple[int, ...], mode_indices: tuple[int, ...]) -> InputConfiguration:
        modes = tuple(self.grid.mode_for(j) for j in mode_indices)
        return InputConfiguration(ports, modes)

    def table(self, ports: tuple[int, ...], mode_indices: tuple[int, ...]):
        key = (ports, mode_indices)
        cached = self._tables.get(key)
        if cached is None:
            dist = brute_force_distribution(
                self.interf, self._inputs_for(ports, mode_indices),
                self.detection_mode, self.bin_width, *self.guards)
            outcomes = dist.outcomes
            cdf = np.cumsum([p for _, p in outcomes])
            cdf[-1] = 1.0  # close the tiny float gap so sampling never overruns
            cached = (outcomes, cdf)
            self._tables[key] = cached
        return cached

    def sample(self, ports: tuple[int, ...], mode_indices: tuple[int, ...],
               rng: np.random.Generator) -> tuple[DetectionOutcome, float]:
        outcomes, cdf = self.table(ports, mode_indices)
        idx = int(np.searchsorted(cdf, rng.random(), side="right"))
        idx = min(idx, len(outcomes) - 1)
        return outcomes[idx]


def _realize_bank(plan: ExperimentPlan, rng: np.random.Generator):
    """Emit each source once; source i feeds interferometer port i."""
    records = [emit(plan.source, rng) for _ in range(plan.n_sources)]
    return records


def draw_sample(plan: ExperimentPlan, interf: Interferometer, rng: np.random.Generator,
                grid: InnerModeGrid, bin_width: float,
                sampler: ConditionalOutcomeSampler | None = None,
                sample_outcome: bool = True) -> SampleRecord:
    """Draw one complete scattershot sample.

    With feed-forward the bank is truncated to the N lowest-index delivering
    sources (fewer than N delivering marks the sample failed).  Without
    feed-forward every emitted photon is kept, so ports can repeat.  The
    detection outcome is drawn from the exact conditional distribution; pass
    ``sample_outcome=False`` to realize only the input side.
    """
    if plan.n_sources > interf.dimension:
        raise DomainError(f"bank of {plan.n_sources} sources needs an interferometer "
                          f"with at least that many ports, got {interf.dimension}")
    if grid.size != plan.source.inner_modes:
        raise DomainError("inner-mode grid size must match the source's inner mode count")
    records = _realize_bank(plan, rng)
    if plan.source.feed_forward:
        delivering = [i for i, r in enumerate(records) if r.delivered_photons >= 1]
        if len(delivering) < plan.n_photons:
            return SampleRecord((), (), (), None, None, len(delivering), True,
                                f"only {len(delivering)} of {plan.n_sources} sources delivered")
        kept = delivering[:plan.n_photons]
        ports = tuple(kept)
        mode_indices = tuple(records[i].heralded_mode for i in kept)
    else:
        ports_list: list[int] = []
        mode_list: list[int] = []
        for i, r in enumerate(records):
            for j, count in enumerate(r.pair_counts):
                ports_list.extend([i] * count)
                mode_list.extend([j] * count)
        if not ports_list:
            return SampleRecord((), (), (), None, None, 0, True, "bank emitted no photons")
        ports = tuple(ports_list)
        mode_indices = tuple(mode_list)
    modes = tuple(grid.mode_for(j) for j in mode_indices)
    n_tot = len(ports)
    if not sample_outcome:
        return SampleRecord(ports, mode_indices, modes, None, None, n_tot, False)
    if sampler is None:
        sampler = ConditionalOutcomeSampler(interf, grid, bin_width)
    outcome, prob = sampler.sample(ports, mode_indices, rng)
    return SampleRecord(ports, mode_indices, modes, outcome, prob, n_tot, False)


@dataclass
class ExpectedSampleDistribution:
    """Analytic mixture of conditional outcome tables over bank realizations."""

    input_probabilities: dict   # (ports, mode_indices) -> probability given success
    output_marginal: dict       # outcome key -> probability given success
    success_probability: float


def _port_set_probability(ports: tuple[int, ...], n_sources: int, p: float) -> float:
    """P(the N lowest-index delivering sources are exactly ``ports``)."""
    n = len(ports)
    top = ports[-1]
    gaps = top + 1 - n  # non-delivering indices below the highest kept port
    return (p ** n) * ((1.0 - p) ** gaps)


def expected_sample_distribution(plan: ExperimentPlan, interf: Interferometer,
                                 grid: InnerModeGrid, bin_width: float,
                                 sampler: ConditionalOutcomeSampler | None = None) -> ExpectedSampleDistribution:
    """Exact sample distribution for a feed-forward plan, by enumeration.

    Sums P(ports) * P(inner modes) * P(outcome | inputs) over every subset of
    delivering sources and every inner-mode assignment, conditioned on
    success.  The input weights must reproduce the analytic success
    probability, which is asserted.
    """
    if not plan.source.feed_forward:
        raise DomainError("expected_sample_distribution requires a feed-forward plan")
    p = delivery_probability(plan.source)
    heralds = herald_distribution(plan.source)
    if sampler is None:
        sampler = ConditionalOutcomeSampler(interf, grid, bin_width)
    n_src, n = plan.n_sources, plan.n_photons
    success = success_probability_analytic(plan)
    if success <= 0.0:
        raise DomainError("plan has zero success probability")
    input_probs: dict[tuple, float] = {}
    marginal: dict[tuple, float] = {}
    total_weight = 0.0
    for subset in itertools.combinations(range(n_src), n):
        w_ports = _port_set_probability(subset, n_src, p)
        total_weight += w_ports
        for mode_indices in itertools.product(range(grid.size), repeat=n):
            w = w_ports
            for j in mode_indices:
                w *= heralds[j]
            w /= success
            input_probs[(subset, mode_indices)] = w
            outcomes, _ = sampler.table(subset, mode_indices)
            for outcome, prob in outcomes:
                if prob == 0.0:
                    continue
                key = outcome.key()
                marginal[key] = marginal.get(key, 0.0) + w * prob
    if abs(total_weight - success) > 1e-9:
        raise NumericGuardError(f"enumerated port-set weights sum to {total_weight!r}, "
                                f"expected success probability {success!r}")
    return ExpectedSampleDistribution(input_probs, marginal, success)


@dataclass(frozen=True)
class GaussianEntryReport:
    """Moment diagnostics of scaled submatrix entries sqrt(M) * U[d, s] * phase."""

    trials: int
    port_count: int
    photons: int
    max_abs_mean: float
    min_quadrature_variance: float
    max_quadrature_variance: float
    max_abs_excess_kurtosis: float
    max_abs_cross_correlation: float
    gaussian_plausible: bool
    notes: tuple[str, ...] = ()


_KURTOSIS_FLAG = 0.3
_VARIANCE_FLAG = 0.1  # relative deviation from 1/2
_MEAN_FLAG = 0.02
_CORRELATION_FLAG = 0.05


def gaussian_entry_diagnostics(port_count: int, photons: int, inner_modes: int,
                               trials: int, rng: np.random.Generator,
                               random_phases: bool = True) -> GaussianEntryReport:
    """Sample scaled submatrix entries over Haar draws and report their moments.

    For each trial a fresh Haar unitary is drawn, ``photons`` random distinct
    rows and columns are selected, and each entry is multiplied by a random
    inner-mode phase exp(i * omega_s * t_d) (omega from an ``inner_modes``
    point grid, detection times uniform).  In the regime
    port_count >> photons^2 the scaled entries behave like i.i.d. complex
    normals with quadrature variance 1/2; strong deviations (flagged through
    variance, kurtosis and cross-correlations) mark the breakdown of that
    approximation.
    """
    if trials < 2:
        raise DomainError("need at least 2 trials")
    notes = []
    if port_count < photons * photons:
        msg = (f"port count {port_count} below photons^2 = {photons * photons}; "
               "unitarity constraints will distort the entry statistics")
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    omega_grid = np.arange(1, inner_modes + 1, dtype=np.float64)
    entries = np.empty((trials, photons * photons), dtype=np.complex128)
    for t in range(trials):
        interf = haar_random(port_count, rng)
        rows = rng.choice(port_count, size=photons, replace=False)
        cols = rng.choice(port_count, size=photons, replace=False)
        sub = interf.matrix[np.ix_(rows, cols)]
        if random_phases:
            omegas = omega_grid[rng.integers(inner_modes, size=photons)]
            times = rng.uniform(0.0, 2.0 * math.pi, size=photons)
            sub = sub * np.exp(1j * omegas[None, :] * times[:, None])
        entries[t] = (math.sqrt(port_count) * sub).ravel()
    quad = np.concatenate([entries.real, entries.imag], axis=1)
    means = quad.mean(axis=0)
    variances = quad.var(axis=0, ddof=1)
    centered = quad - means
    m4 = (centered ** 4).mean(axis=0)
    excess_kurtosis = m4 / variances ** 2 - 3.0
    corr = np.corrcoef(quad, rowvar=False)
    off_diag = corr[~np.eye(corr.shape[0], dtype=bool)]
    max_corr = float(np.max(np.abs(off_diag))) if off_diag.size else 0.0
    report = GaussianEntryReport(
        trials=trials,
        port_count=port_count,
        photons=photons,
        max_abs_mean=float(np.max(np.abs(means))),
        min_quadrature_variance=float(variances.min()),
        max_quadrature_variance=float(variances.max()),
        max_abs_excess_kurtosis=float(np.max(np.abs(excess_kurtosis))),
        max_abs_cross_correlation=max_corr,
        gaussian_plausible=bool(
            np.max(np.abs(means)) < _MEAN_FLAG
            and abs(variances.min() - 0.5) < _VARIANCE_FLAG * 0.5
            and abs(variances.max() - 0.5) < _VARIANCE_FLAG * 0.5
            and np.max(np.abs(excess_kurtosis)) < _KURTOSIS_FLAG
            and max_corr < _CORRELATION_FLAG
        ),
        notes=tuple(notes),
    )
    return report
