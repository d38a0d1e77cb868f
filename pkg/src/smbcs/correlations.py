"""Exact detection probabilities for resolved multiphoton correlation events.

A detection outcome is a multiset of (output port, resolved bin) pairs, in
either of two conjugate flavors:

* time-resolved: every detector reports a time bin of width ``delta_t``;
  input photons must carry rectangular temporal envelopes.  The amplitude
  matrix entry for detector row (d, t_d) and source column (s) is
  ``U[d, s] * chi(t_d - t_s) * exp(i * omega_s * t_d)`` with ``chi`` the
  temporal rectangle of height sqrt(bandwidth).
* frequency-resolved: detectors report frequency bins of width
  ``delta_omega``; inputs carry rectangular spectra and the entry is
  ``U[d, s] * xi(omega_d - omega_s) * exp(i * omega_d * t_s)`` with ``xi`` the
  spectral rectangle of height 1/sqrt(bandwidth).

The outcome probability is ``bin_width**N * |perm(matrix)|**2`` divided by
``prod(m_b!)`` over groups of identical (port, bin) pairs.  With bins exactly
partitioning the envelope supports this defines a complete discrete
measurement, so probabilities over all outcomes sum to one; the brute-force
enumeration in :mod:`smbcs.sampler` checks that.

The two flavors are duals: interchanging the roles of detected and source
values maps one amplitude matrix onto the other entry by entry.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericGuardError, ResolutionError
from .interferometer import Interferometer
from .permanent import perm_fast, perm_with_multiplicities
from .spectra import SpectralMode, SpectralShape

__all__ = [
    "DetectionMode",
    "InputConfiguration",
    "DetectionOutcome",
    "ResolutionReport",
    "check_time_resolution",
    "check_frequency_resolution",
    "amplitude_matrix",
    "outcome_probability",
]

DEFAULT_EPSILON = 0.05

# Probability bound slack: permanents are exact sums, so only accumulated
# rounding can push a value past the physical range.
_PROB_LOWER_SLACK = 1e-12
_PROB_UPPER_SLACK = 1e-9


class DetectionMode(enum.Enum):
    TIME_RESOLVED = "time"
    FREQUENCY_RESOLVED = "frequency"


@dataclass(frozen=True)
class InputConfiguration:
    """Occupied input ports with the spectral mode of each injected photon.

    Ports may repeat: a port occupied by several photons contributes one
    (port, mode) column per photon to the amplitude matrix.
    """

    ports: tuple[int, ...]
    modes: tuple[SpectralMode, ...]

    def __post_init__(self):
        if len(self.ports) != len(self.modes):
            raise DomainError(f"{len(self.ports)} ports but {len(self.modes)} modes")
        if not self.ports:
            raise DomainError("input configuration must contain at least one photon")
        if any(p < 0 for p in self.ports):
            raise DomainError("port indices must be non-negative")

    @property
    def n_photons(self) -> int:
        return len(self.ports)


@dataclass(frozen=True)
class DetectionOutcome:
    """A multiset of (output port, resolved value) detections plus bin width."""

    mode: DetectionMode
    ports: tuple[int, ...]
    values: tuple[float, ...]
    bin_width: float

    def __post_init__(self):
        if len(self.ports) != len(self.values):
            raise DomainError(f"{len(self.ports)} ports but {len(self.values)} resolved values")
        if not self.ports:
            raise DomainError("detection outcome must contain at least one photon")
        if not (self.bin_width > 0 and math.isfinite(self.bin_width)):
            raise DomainError(f"bin width must be positive, got {self.bin_width}")

    @property
    def n_photons(self) -> int:
        return len(self.ports)

    def key(self) -> tuple:
        """Hashable identity of the unordered outcome."""
        return (self.mode.value, tuple(sorted(zip(self.ports, self.values))))


@dataclass(frozen=True)
class ResolutionReport:
    max_ratio: float
    satisfied: bool
    worst_pair: tuple[int, int]
    epsilon: float


def check_time_resolution(inputs: InputConfiguration, delta_t: float,
                          epsilon: float = DEFAULT_EPSILON) -> ResolutionReport:
    """Check that a time bin ``delta_t`` cannot distinguish the input photons.

    The binding ratios are ``delta_t * |omega_s - omega_s'|`` over source
    pairs and ``delta_t * bandwidth`` per source; the report carries the worst
    ratio and the indices responsible ((i, i) when a single source's
    bandwidth dominates).
    """
    if not (delta_t > 0):
        raise DomainError(f"delta_t must be positive, got {delta_t}")
    omegas = [m.central_frequency for m in inputs.modes]
    widths = [m.bandwidth for m in inputs.modes]
    worst = max(range(len(widths)), key=widths.__getitem__)
    max_ratio = delta_t * widths[worst]
    worst_pair = (worst, worst)
    for i in range(len(omegas)):
        for j in range(i + 1, len(omegas)):
            ratio = delta_t * abs(omegas[i] - omegas[j])
            if ratio > max_ratio:
                max_ratio, worst_pair = ratio, (i, j)
    return ResolutionReport(max_ratio, max_ratio <= epsilon, worst_pair, epsilon)


def check_frequency_resolution(inputs: InputConfiguration, delta_omega: float,
                               epsilon: float = DEFAULT_EPSILON) -> ResolutionReport:
    """Conjugate of :func:`check_time_resolution` for a frequency bin.

    Ratios are ``delta_omega * |t_s - t_s'|`` over pairs and
    ``delta_omega / bandwidth`` per source.
    """
    if not (delta_omega > 0):
        raise DomainError(f"delta_omega must be positive, got {delta_omega}")
    times = [m.central_time for m in inputs.modes]
    widths = [m.bandwidth for m in inputs.modes]
    worst = min(range(len(widths)), key=widths.__getitem__)
    max_ratio = delta_omega / widths[worst]
    worst_pair = (worst, worst)
    for i in range(len(times)):
        for j in range(i + 1, len(times)):
            ratio = delta_omega * abs(times[i] - times[j])
            if ratio > max_ratio:
                max_ratio, worst_pair = ratio, (i, j)
    return ResolutionReport(max_ratio, max_ratio <= epsilon, worst_pair, epsilon)


def _require_shape(inputs: InputConfiguration, shape: SpectralShape, mode: DetectionMode):
    for k, m in enumerate(inputs.modes):
        if m.shape is not shape:
            raise DomainError(f"{mode.value}-resolved detection needs {shape.value} input "
                              f"envelopes, but photon {k} has {m.shape.value}")


def amplitude_matrix(interf: Interferometer, inputs: InputConfiguration,
                     outcome: DetectionOutcome) -> np.ndarray:
    """N x N matrix whose squared permanent modulus gives the outcome density.

    Row i belongs to the detected photon (port, value) pair i, column s to
    input photon s.  When every envelope factor is equal and non-zero the
    matrix reduces to the pure transfer-phase form
    ``U[d, s] * exp(i * omega * t)`` times a global constant.
    """
    n = inputs.n_photons
    if outcome.n_photons != n:
        raise DomainError(f"outcome has {outcome.n_photons} photons, inputs have {n}")
    if max(outcome.ports) >= interf.dimension or max(inputs.ports) >= interf.dimension:
        raise DomainError("port index exceeds interferometer dimension")
    u_sub = interf.matrix[np.ix_(outcome.ports, inputs.ports)]
    values = np.asarray(outcome.values, dtype=np.float64)
    if outcome.mode is DetectionMode.FREQUENCY_RESOLVED:
        _require_shape(inputs, SpectralShape.RECTANGULAR_FREQUENCY, outcome.mode)
        omega_c = np.array([m.central_frequency for m in inputs.modes])
        widths = np.array([m.bandwidth for m in inputs.modes])
        t_c = np.array([m.central_time for m in inputs.modes])
        inside = np.abs(values[:, None] - omega_c[None, :]) <= 0.5 * widths[None, :]
        envelope = inside / np.sqrt(widths)[None, :]
        phase = np.exp(1j * values[:, None] * t_c[None, :])
    else:
        _require_shape(inputs, SpectralShape.RECTANGULAR_TEMPORAL, outcome.mode)
        omega_c = np.array([m.central_frequency for m in inputs.modes])
        widths = np.array([m.bandwidth for m in inputs.modes])
        t_c = np.array([m.central_time for m in inputs.modes])
        inside = (values[:, None] >= t_c[None, :]) & (values[:, None] < t_c[None, :] + 1.0 / widths[None, :])
        envelope = inside * np.sqrt(widths)[None, :]
        phase = np.exp(1j * omega_c[None, :] * values[:, None])
    return u_sub * envelope * phase


def _bunching_divisor(outcome: DetectionOutcome) -> float:
    counts: dict[tuple[int, float], int] = {}
    for port, value in zip(outcome.ports, outcome.values):
        counts[(port, value)] = counts.get((port, value), 0) + 1
    divisor = 1.0
    for c in counts.values():
        divisor *= math.factorial(c)
    return divisor


def _grouped_permanent(matrix: np.ndarray, inputs: InputConfiguration,
                       outcome: DetectionOutcome) -> complex:
    """Permanent of the amplitude matrix, compressing repeated rows/columns.

    Repeated (port, bin) detections and repeated (port, mode) sources make
    identical rows/columns; those collapse onto a base matrix evaluated with
    explicit multiplicities.
    """
    row_groups: dict[tuple, int] = {}
    row_first: list[int] = []
    for i, key in enumerate(zip(outcome.ports, outcome.values)):
        if key in row_groups:
            row_groups[key] += 1
        else:
            row_groups[key] = 1
            row_first.append(i)
    col_groups: dict[tuple, int] = {}
    col_first: list[int] = []
    for j, key in enumerate(zip(inputs.ports, inputs.modes)):
        if key in col_groups:
            col_groups[key] += 1
        else:
            col_groups[key] = 1
            col_first.append(j)
    if len(row_first) == matrix.shape[0] and len(col_first) == matrix.shape[1]:
        return perm_fast(matrix)
    if len(row_first) != len(col_first):
        # Rectangular base: fall back to the full matrix, whose permanent is
        # identical to the expanded-base evaluation.
        return perm_fast(matrix)
    base = matrix[np.ix_(row_first, col_first)]
    row_mult = [row_groups[(outcome.ports[i], outcome.values[i])] for i in row_first]
    col_mult = [col_groups[(inputs.ports[j], inputs.modes[j])] for j in col_first]
    return perm_with_multiplicities(base, row_mult, col_mult)


def outcome_probability(interf: Interferometer, inputs: InputConfiguration,
                        outcome: DetectionOutcome, epsilon: float = DEFAULT_EPSILON,
                        resolution_policy: str = "warn") -> float:
    """Probability of one resolved detection outcome.

    ``bin_width**N * |perm|**2 / prod(m_b!)`` with one factorial per group of
    identical (port, bin) detections.  ``resolution_policy`` controls what
    happens when the bin width fails the resolution check: ``"strict"``
    raises, ``"warn"`` proceeds with a warning, ``"ignore"`` proceeds
    silently.  The result is asserted into [0, 1]; it is never clipped.
    """
    if resolution_policy not in ("strict", "warn", "ignore"):
        raise DomainError(f"unknown resolution policy {resolution_policy!r}")
    if resolution_policy != "ignore":
        if outcome.mode is DetectionMode.TIME_RESOLVED:
            report = check_time_resolution(inputs, outcome.bin_width, epsilon)
        else:
            report = check_frequency_resolution(inputs, outcome.bin_width, epsilon)
        if not report.satisfied:
            msg = (f"bin width {outcome.bin_width:g} fails the {outcome.mode.value}-resolution "
                   f"condition: ratio {report.max_ratio:.3g} > {report.epsilon:g} "
                   f"(sources {report.worst_pair})")
            if resolution_policy == "strict":
                raise ResolutionError(msg)
            warnings.warn(msg, stacklevel=2)
    matrix = amplitude_matrix(interf, inputs, outcome)
    perm = _grouped_permanent(matrix, inputs, outcome)
    n = inputs.n_photons
    prob = (outcome.bin_width ** n) * (abs(perm) ** 2) / _bunching_divisor(outcome)
    if prob < -_PROB_LOWER_SLACK or prob > 1.0 + _PROB_UPPER_SLACK:
        raise NumericGuardError(f"outcome probability {prob!r} outside [0, 1]")
    return prob
