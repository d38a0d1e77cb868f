"""Heralded SPDC sources with random inner-mode multiplexing.

Each source pumps ``k`` inner modes (central frequencies for the RFM flavor,
injection time slots for RTM).  Every inner mode independently produces a
geometric number of photon pairs, P(n) = (1 - gamma^2) * gamma^(2n), and
detection of the idler tags the signal photon with the inner mode it occupies.

Feed-forward blocking limits a source to at most one delivered photon.  With
``strict_single_pair`` (the default) an inner mode counts as firing only when
it produced exactly one pair, so the delivery probability is
``1 - (1 - (1-gamma^2)*gamma^2)**k``; with the flag off, blocking is modeled
as ideal and any pair count >= 1 fires, giving ``1 - (1-gamma^2)**k``.

When several inner modes fire, the heralded one is chosen by
``herald_policy``: ``"lowest_index"`` keeps the first firing mode in scan
order (what shutter hardware does, biased toward low indices), ``"uniform"``
picks uniformly among the firing modes, which makes the heralded inner mode
exactly uniform over the grid by exchangeability.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .spectra import SpectralMode, SpectralShape

__all__ = [
    "Flavor",
    "SpdcSource",
    "EmissionRecord",
    "InnerModeGrid",
    "rfm_grid",
    "rtm_grid",
    "pair_number_probability",
    "single_photon_probability",
    "at_least_one_probability",
    "delivery_probability",
    "max_single_photon_probability",
    "optimal_squeezing",
    "gamma_for_at_least_one",
    "herald_distribution",
    "emit",
    "bank_delivery_counts",
    "bank_photon_totals",
    "max_inner_modes",
]

HERALD_POLICIES = ("lowest_index", "uniform")

# Keep vectorized Monte Carlo scratch arrays around this many elements.
_CHUNK_ELEMENTS = 8_000_000


class Flavor(enum.Enum):
    RFM = "rfm"  # random central frequencies, time-resolved detection
    RTM = "rtm"  # random injection times, frequency-resolved detection


@dataclass(frozen=True)
class SpdcSource:
    """One multiplexed SPDC source: squeezing, inner-mode count and policies."""

    gamma: float
    inner_modes: int
    flavor: Flavor = Flavor.RFM
    feed_forward: bool = True
    strict_single_pair: bool = True
    herald_policy: str = "lowest_index"

    def __post_init__(self):
        if not (0.0 <= self.gamma < 1.0):
            raise DomainError(f"squeezing must satisfy 0 <= gamma < 1, got {self.gamma}")
        if self.inner_modes < 1:
            raise DomainError(f"inner mode count must be >= 1, got {self.inner_modes}")
        if self.herald_policy not in HERALD_POLICIES:
            raise DomainError(f"herald_policy must be one of {HERALD_POLICIES}")


@dataclass(frozen=True)
class EmissionRecord:
    """Outcome of one pump cycle of a single source."""

    pair_counts: tuple[int, ...]
    heralded_mode: int | None
    delivered_photons: int


def pair_number_probability(gamma: float, n: int) -> float:
    """P(n photon pairs in one inner mode) = (1 - gamma^2) * gamma^(2n)."""
    if not (0.0 <= gamma < 1.0):
        raise DomainError(f"squeezing must satisfy 0 <= gamma < 1, got {gamma}")
    if n < 0:
        raise DomainError("pair number must be non-negative")
    return (1.0 - gamma * gamma) * gamma ** (2 * n)


def _single_pair_probability(gamma: float) -> float:
    g2 = gamma * gamma
    return (1.0 - g2) * g2


def single_photon_probability(source: SpdcSource) -> float:
    """Probability that feed-forward blocking delivers exactly one photon.

    Equals ``1 - (1 - (1-gamma^2)*gamma^2)**k``: at least one of the k inner
    modes produced a single pair.  Only meaningful with feed-forward; without
    it use :func:`at_least_one_probability`.
    """
    if not source.feed_forward:
        raise DomainError("single_photon_probability requires feed_forward; "
                          "use at_least_one_probability instead")
    p1 = _single_pair_probability(source.gamma)
    return 1.0 - (1.0 - p1) ** source.inner_modes


def at_least_one_probability(source: SpdcSource) -> float:
    """Probability that a source emits at least one photon: 1 - (1-gamma^2)^k."""
    return 1.0 - (1.0 - source.gamma ** 2) ** source.inner_modes


def delivery_probability(source: SpdcSource) -> float:
    """Probability that the source delivers at least one photon into its port."""
    if source.feed_forward and source.strict_single_pair:
        return single_photon_probability(source)
    return at_least_one_probability(source)


def optimal_squeezing() -> float:
    """Squeezing that maximizes the single-pair probability per mode."""
    return 1.0 / math.sqrt(2.0)


def max_single_photon_probability(inner_modes: int) -> float:
    """Best achievable feed-forward delivery probability, 1 - (3/4)^k."""
    if inner_modes < 1:
        raise DomainError("inner mode count must be >= 1")
    return 1.0 - 0.75 ** inner_modes


def gamma_for_at_least_one(inner_modes: int, p_target: float) -> float:
    """Squeezing for which at_least_one_probability reaches ``p_target``."""
    if not (0.0 <= p_target < 1.0):
        raise DomainError("target probability must lie in [0, 1)")
    if inner_modes < 1:
        raise DomainError("inner mode count must be >= 1")
    return math.sqrt(1.0 - (1.0 - p_target) ** (1.0 / inner_modes))


def _fire_probability(source: SpdcSource) -> float:
    if source.feed_forward and source.strict_single_pair:
        return _single_pair_probability(source.gamma)
    return source.gamma ** 2


def herald_distribution(source: SpdcSource) -> np.ndarray:
    """P(heralded inner mode = j | source delivered), length-k array.

    Uniform under the ``"uniform"`` policy; geometric under
    ``"lowest_index"`` because low-index modes shadow later ones.
    """
    k = source.inner_modes
    if source.herald_policy == "uniform":
        return np.full(k, 1.0 / k)
    q = _fire_probability(source)
    if q == 0.0:
        return np.full(k, np.nan)
    weights = (1.0 - q) ** np.arange(k) * q
    return weights / weights.sum()


def _fires(source: SpdcSource, pair_counts: np.ndarray) -> np.ndarray:
    if source.feed_forward and source.strict_single_pair:
        return pair_counts == 1
    return pair_counts >= 1


def emit(source: SpdcSource, rng: np.random.Generator) -> EmissionRecord:
    """Realize one pump cycle: draw pair numbers and apply the herald policy."""
    g2 = source.gamma ** 2
    pairs = rng.geometric(1.0 - g2, size=source.inner_modes) - 1
    fires = _fires(source, pairs)
    firing = np.flatnonzero(fires)
    if firing.size == 0:
        herald = None
    elif source.herald_policy == "uniform":
        herald = int(firing[rng.integers(firing.size)])
    else:
        herald = int(firing[0])
    if source.feed_forward:
        delivered = 1 if herald is not None else 0
    else:
        delivered = int(pairs.sum())
        if delivered > 0 and herald is None:
            # No mode met the herald criterion but photons still exist
            # (only possible with strict_single_pair and a multi-pair mode).
            herald = int(np.flatnonzero(pairs >= 1)[0])
    return EmissionRecord(tuple(int(x) for x in pairs), herald, delivered)


def _chunked_trials(trials: int, per_trial: int) -> list[int]:
    chunk = max(1, _CHUNK_ELEMENTS // max(per_trial, 1))
    sizes = []
    left = trials
    while left > 0:
        take = min(chunk, left)
        sizes.append(take)
        left -= take
    return sizes


def bank_delivery_counts(source: SpdcSource, n_sources: int, trials: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Number of delivering sources per trial for a bank of identical sources.

    Vectorized realization of per-source emission with the same firing
    criterion as :func:`emit`; a source delivers when any inner mode fires
    (feed-forward) or when it produced any photon at all (no feed-forward).
    """
    if n_sources < 1 or trials < 1:
        raise DomainError("n_sources and trials must be >= 1")
    g2 = source.gamma ** 2
    out = np.empty(trials, dtype=np.int64)
    pos = 0
    for take in _chunked_trials(trials, n_sources * source.inner_modes):
        pairs = rng.geometric(1.0 - g2, size=(take, n_sources, source.inner_modes)) - 1
        if source.feed_forward:
            delivers = _fires(source, pairs).any(axis=2)
        else:
            delivers = pairs.sum(axis=2) >= 1
        out[pos:pos + take] = delivers.sum(axis=1)
        pos += take
    return out


def bank_photon_totals(source: SpdcSource, n_sources: int, trials: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Total photon number emitted by the bank per trial (no blocking)."""
    if n_sources < 1 or trials < 1:
        raise DomainError("n_sources and trials must be >= 1")
    g2 = source.gamma ** 2
    out = np.empty(trials, dtype=np.int64)
    pos = 0
    for take in _chunked_trials(trials, n_sources * source.inner_modes):
        pairs = rng.geometric(1.0 - g2, size=(take, n_sources, source.inner_modes)) - 1
        out[pos:pos + take] = pairs.sum(axis=(1, 2))
        pos += take
    return out


@dataclass(frozen=True)
class InnerModeGrid:
    """The k random inner-mode values a source bank can herald into.

    For RFM the grid holds central frequencies and all photons share
    ``common_time`` (rectangular temporal envelopes for time-resolved
    detection).  For RTM it holds injection times and all photons share
    ``common_frequency`` (rectangular spectra for frequency-resolved
    detection).
    """

    flavor: Flavor
    values: tuple[float, ...]
    bandwidth: float
    common_frequency: float
    common_time: float

    def __post_init__(self):
        if not self.values:
            raise DomainError("inner-mode grid must hold at least one value")
        if not (self.bandwidth > 0):
            raise DomainError("bandwidth must be positive")

    @property
    def size(self) -> int:
        return len(self.values)

    def mode_for(self, index: int) -> SpectralMode:
        if not (0 <= index < len(self.values)):
            raise DomainError(f"inner mode index {index} outside grid of size {len(self.values)}")
        if self.flavor is Flavor.RFM:
            return SpectralMode(self.values[index], self.common_time, self.bandwidth,
                                SpectralShape.RECTANGULAR_TEMPORAL)
        return SpectralMode(self.common_frequency, self.values[index], self.bandwidth,
                            SpectralShape.RECTANGULAR_FREQUENCY)


def assign_inner_mode(record: EmissionRecord, grid: InnerModeGrid) -> SpectralMode:
    """Spectral mode of the heralded photon for one emission record."""
    if record.heralded_mode is None:
        raise DomainError("emission record carries no herald")
    return grid.mode_for(record.heralded_mode)


def rfm_grid(k: int, bandwidth: float, delta_t: float, epsilon: float = 0.05,
             base_frequency: float = 0.0, common_time: float = 0.0) -> InnerModeGrid:
    """Uniform frequency grid sized so the time-resolution check passes.

    The spacing saturates ``delta_t * (k-1) * spacing <= epsilon`` with a 1%
    margin, the widest grid compatible with indistinguishability at the
    configured detector resolution.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    if not (delta_t > 0 and epsilon > 0):
        raise DomainError("delta_t and epsilon must be positive")
    spacing = 0.0 if k == 1 else 0.99 * epsilon / (delta_t * (k - 1))
    values = tuple(base_frequency + j * spacing for j in range(k))
    return InnerModeGrid(Flavor.RFM, values, bandwidth, base_frequency, common_time)


def rtm_grid(k: int, bandwidth: float, pulse_rate: float,
             common_frequency: float, base_time: float = 0.0) -> InnerModeGrid:
    """Time-slot grid on the pump pulse comb: t_j = base_time + j / pulse_rate."""
    if k < 1:
        raise DomainError("k must be >= 1")
    if not (pulse_rate > 0):
        raise DomainError("pulse_rate must be positive")
    values = tuple(base_time + j / pulse_rate for j in range(k))
    return InnerModeGrid(Flavor.RTM, values, bandwidth, common_frequency, base_time)


def max_inner_modes(delta_t: float | None = None, delta_omega: float | None = None,
                    pulse_rate: float | None = None, epsilon: float = 1.0) -> int:
    """Upper bound on the usable number of inner modes for given resolutions.

    With a pulsed pump the bound is ``epsilon * pulse_rate / delta_omega``;
    otherwise (cw pump, or frequency multiplexing resolved at
    ``delta_omega``) it is ``epsilon / (delta_t * delta_omega)``.  The default
    ``epsilon = 1`` reproduces the order-of-magnitude estimate; pass the
    resolution-validator epsilon for a grid that is guaranteed to satisfy the
    indistinguishability conditions.
    """
    if not (epsilon > 0):
        raise DomainError("epsilon must be positive")
    if pulse_rate is not None:
        if delta_omega is None or not (delta_omega > 0 and pulse_rate > 0):
            raise DomainError("pulsed bound needs positive pulse_rate and delta_omega")
        return max(int(math.floor(epsilon * pulse_rate / delta_omega)), 0)
    if delta_t is None or delta_omega is None or not (delta_t > 0 and delta_omega > 0):
        raise DomainError("cw bound needs positive delta_t and delta_omega")
    return max(int(math.floor(epsilon / (delta_t * delta_omega))), 0)
