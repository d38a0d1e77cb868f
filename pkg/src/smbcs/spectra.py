"""Single-photon spectral amplitudes and their conjugate envelopes.

Two idealized shapes are supported and selected per experiment:

* ``RECTANGULAR_FREQUENCY``: flat spectrum of width ``delta_omega`` centred on
  the photon's central frequency, carrier phase ``exp(+i*omega*t_c)``.
* ``RECTANGULAR_TEMPORAL``: flat temporal profile of width
  ``1/delta_omega`` starting at the central time (half-open window), carrier
  ``exp(-i*omega_c*t)``.

Both envelopes are unit normalized: the squared magnitude integrates to 1 over
the conjugate variable.  Conventions (rectangle alignment, carrier signs) are
fixed here once so that overlaps and correlation matrices are deterministic.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "SpectralShape",
    "SpectralMode",
    "frequency_amplitude",
    "temporal_amplitude",
    "mode_overlap",
]


class SpectralShape(enum.Enum):
    RECTANGULAR_FREQUENCY = "rectangular_frequency"
    RECTANGULAR_TEMPORAL = "rectangular_temporal"


@dataclass(frozen=True)
class SpectralMode:
    """A single photon's central frequency/time, bandwidth and envelope shape.

    Units are SI throughout: ``central_frequency`` and ``bandwidth`` in rad/s,
    ``central_time`` in seconds.
    """

    central_frequency: float
    central_time: float
    bandwidth: float
    shape: SpectralShape

    def __post_init__(self):
        if not (self.bandwidth > 0.0 and math.isfinite(self.bandwidth)):
            raise DomainError(f"bandwidth must be positive and finite, got {self.bandwidth}")
        if not (math.isfinite(self.central_frequency) and math.isfinite(self.central_time)):
            raise DomainError("central frequency/time must be finite")

    @property
    def temporal_width(self) -> float:
        """Width of the rectangular temporal profile, 1/bandwidth."""
        return 1.0 / self.bandwidth

    def frequency_support(self) -> tuple[float, float]:
        """Closed support [lo, hi] of the rectangular spectrum."""
        half = 0.5 * self.bandwidth
        return (self.central_frequency - half, self.central_frequency + half)

    def time_support(self) -> tuple[float, float]:
        """Half-open support [start, end) of the rectangular temporal profile."""
        return (self.central_time, self.central_time + self.temporal_width)

    def to_json_dict(self) -> dict:
        return {
            "omega_c": self.central_frequency,
            "t_c": self.central_time,
            "delta_omega": self.bandwidth,
            "shape": self.shape.value,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SpectralMode":
        return cls(
            central_frequency=float(data["omega_c"]),
            central_time=float(data["t_c"]),
            bandwidth=float(data["delta_omega"]),
            shape=SpectralShape(data["shape"]),
        )


def frequency_amplitude(mode: SpectralMode, omega: float) -> complex:
    """Spectral amplitude at angular frequency ``omega``.

    Returns ``exp(i*omega*t_c)/sqrt(delta_omega)`` inside the rectangular
    support (closed interval) and exactly 0 outside.
    """
    if mode.shape is not SpectralShape.RECTANGULAR_FREQUENCY:
        raise DomainError(f"frequency_amplitude needs a rectangular-frequency mode, got {mode.shape}")
    if abs(omega - mode.central_frequency) > 0.5 * mode.bandwidth:
        return 0j
    return cmath.exp(1j * omega * mode.central_time) / math.sqrt(mode.bandwidth)


def temporal_amplitude(mode: SpectralMode, t: float) -> complex:
    """Temporal amplitude at time ``t``.

    Magnitude ``sqrt(delta_omega)`` inside the half-open window
    ``[t_c, t_c + 1/delta_omega)``, carrier ``exp(-i*omega_c*t)``, 0 outside.
    """
    if mode.shape is not SpectralShape.RECTANGULAR_TEMPORAL:
        raise DomainError(f"temporal_amplitude needs a rectangular-temporal mode, got {mode.shape}")
    start, end = mode.time_support()
    if not (start <= t < end):
        return 0j
    return math.sqrt(mode.bandwidth) * cmath.exp(-1j * mode.central_frequency * t)


def _phase_integral(lo: float, hi: float, rate: float) -> complex:
    """Integral of exp(i*rate*x) over [lo, hi] (0 when the interval is empty)."""
    if hi <= lo:
        return 0j
    if rate == 0.0:
        return complex(hi - lo)
    return (cmath.exp(1j * rate * hi) - cmath.exp(1j * rate * lo)) / (1j * rate)


def mode_overlap(a: SpectralMode, b: SpectralMode) -> complex:
    """Overlap integral conj(amp_a) * amp_b over the conjugate variable.

    The modulus lies in [0, 1] and equals 1 only for identical modes (up to a
    global phase).  Computed analytically from the rectangle intersection.
    """
    if a.shape is not b.shape:
        raise DomainError(f"cannot overlap {a.shape} with {b.shape}")
    if a.shape is SpectralShape.RECTANGULAR_FREQUENCY:
        lo_a, hi_a = a.frequency_support()
        lo_b, hi_b = b.frequency_support()
        lo, hi = max(lo_a, lo_b), min(hi_a, hi_b)
        # conj(e^{i w t_a}) e^{i w t_b} integrated over the common support.
        integral = _phase_integral(lo, hi, b.central_time - a.central_time)
        return integral / math.sqrt(a.bandwidth * b.bandwidth)
    lo_a, hi_a = a.time_support()
    lo_b, hi_b = b.time_support()
    lo, hi = max(lo_a, lo_b), min(hi_a, hi_b)
    # conj(e^{-i w_a t}) e^{-i w_b t} = e^{i (w_a - w_b) t}.
    integral = _phase_integral(lo, hi, a.central_frequency - b.central_frequency)
    return math.sqrt(a.bandwidth * b.bandwidth) * integral
