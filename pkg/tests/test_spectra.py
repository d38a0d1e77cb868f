import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smbcs.errors import DomainError
from smbcs.spectra import (
    SpectralMode,
    SpectralShape,
    frequency_amplitude,
    mode_overlap,
    temporal_amplitude,
)

from conftest import freq_mode, temporal_mode


def quad_norm_frequency(mode, n_points=200_001):
    """Numeric quadrature of the squared spectral envelope (midpoint rule)."""
    lo, hi = mode.frequency_support()
    span = hi - lo
    xs = lo + (np.arange(n_points) + 0.5) * span / n_points
    vals = np.array([abs(frequency_amplitude(mode, x)) ** 2 for x in xs])
    return vals.sum() * span / n_points


def quad_norm_temporal(mode, n_points=200_001):
    lo, hi = mode.time_support()
    span = hi - lo
    xs = lo + (np.arange(n_points) + 0.5) * span / n_points
    vals = np.array([abs(temporal_amplitude(mode, x)) ** 2 for x in xs])
    return vals.sum() * span / n_points


def test_unit_width_rectangle_center_value():
    mode = freq_mode(omega=3.0, t=0.0, bw=1.0)
    assert frequency_amplitude(mode, 3.0) == pytest.approx(1.0)


def test_outside_support_is_zero():
    mode = freq_mode(omega=3.0, t=0.0, bw=1.0)
    assert frequency_amplitude(mode, 3.6) == 0
    assert frequency_amplitude(mode, 3.5) != 0  # closed support boundary


def test_frequency_normalization_random_modes(rng):
    for _ in range(5):
        mode = freq_mode(omega=rng.uniform(1, 10), t=rng.uniform(-1, 1),
                         bw=rng.uniform(0.1, 4.0))
        assert quad_norm_frequency(mode) == pytest.approx(1.0, abs=1e-9)


def test_temporal_rectangle_height():
    mode = temporal_mode(bw=2.0, t=0.0)
    assert abs(temporal_amplitude(mode, 0.25)) == pytest.approx(math.sqrt(2.0))
    assert temporal_amplitude(mode, 0.6) == 0
    assert temporal_amplitude(mode, 0.5) == 0  # half-open window


def test_temporal_normalization_random_modes(rng):
    for _ in range(5):
        mode = temporal_mode(omega=rng.uniform(1, 10), t=rng.uniform(-1, 1),
                             bw=rng.uniform(0.1, 4.0))
        assert quad_norm_temporal(mode) == pytest.approx(1.0, abs=1e-9)


def test_shape_mismatch_raises():
    with pytest.raises(DomainError):
        frequency_amplitude(temporal_mode(), 1.0)
    with pytest.raises(DomainError):
        temporal_amplitude(freq_mode(), 1.0)
    with pytest.raises(DomainError):
        mode_overlap(freq_mode(), temporal_mode())


def test_bad_bandwidth_rejected():
    with pytest.raises(DomainError):
        SpectralMode(1.0, 0.0, 0.0, SpectralShape.RECTANGULAR_FREQUENCY)
    with pytest.raises(DomainError):
        SpectralMode(1.0, 0.0, -2.0, SpectralShape.RECTANGULAR_TEMPORAL)


def test_self_overlap_is_one():
    for mode in (freq_mode(bw=0.7, t=0.3), temporal_mode(bw=1.7, omega=2.0)):
        assert mode_overlap(mode, mode) == pytest.approx(1.0)


def test_disjoint_frequency_supports_overlap_zero():
    a = freq_mode(omega=2.0, bw=1.0)
    b = freq_mode(omega=3.0, bw=1.0)  # separation equals the bandwidth
    assert mode_overlap(a, b) == 0


def test_half_overlapping_rectangles():
    a = freq_mode(omega=2.0, bw=1.0, t=0.0)
    b = freq_mode(omega=2.5, bw=1.0, t=0.0)
    assert abs(mode_overlap(a, b)) == pytest.approx(0.5)


def quad_overlap_frequency(a, b, n_points=400_001):
    lo = min(a.frequency_support()[0], b.frequency_support()[0])
    hi = max(a.frequency_support()[1], b.frequency_support()[1])
    xs = lo + (np.arange(n_points) + 0.5) * (hi - lo) / n_points
    vals = np.array([np.conj(frequency_amplitude(a, x)) * frequency_amplitude(b, x)
                     for x in xs])
    return vals.sum() * (hi - lo) / n_points


def test_overlap_matches_quadrature(rng):
    for _ in range(4):
        a = freq_mode(omega=rng.uniform(2, 4), t=rng.uniform(-0.5, 0.5), bw=rng.uniform(0.5, 2))
        b = freq_mode(omega=rng.uniform(2, 4), t=rng.uniform(-0.5, 0.5), bw=rng.uniform(0.5, 2))
        assert mode_overlap(a, b) == pytest.approx(quad_overlap_frequency(a, b), abs=2e-5)


@settings(max_examples=150, deadline=None)
@given(
    omega_a=st.floats(0.5, 20), omega_b=st.floats(0.5, 20),
    t_a=st.floats(-2, 2), t_b=st.floats(-2, 2),
    bw_a=st.floats(0.05, 5), bw_b=st.floats(0.05, 5),
    shape=st.sampled_from(list(SpectralShape)),
)
def test_overlap_modulus_bounded(omega_a, omega_b, t_a, t_b, bw_a, bw_b, shape):
    a = SpectralMode(omega_a, t_a, bw_a, shape)
    b = SpectralMode(omega_b, t_b, bw_b, shape)
    value = abs(mode_overlap(a, b))
    assert value <= 1.0 + 1e-12
    if value > 1.0 - 1e-12:
        # Saturation only for identical envelopes (phases may differ globally).
        assert bw_a == pytest.approx(bw_b, rel=1e-9)


def test_conjugate_width_consistency():
    # Numeric transform of the temporal rectangle: RMS width of the frequency
    # profile (on a +-10/width grid) must be within a factor 10 of 1/width.
    bw = 2.0
    mode = temporal_mode(omega=0.0, t=0.0, bw=bw)
    width_t = mode.temporal_width
    ts = np.linspace(0.0, width_t, 2001, endpoint=False)
    chi = np.array([temporal_amplitude(mode, t) for t in ts])
    omegas = np.linspace(-10.0 / width_t, 10.0 / width_t, 4001)
    dt = ts[1] - ts[0]
    profile = np.array([np.sum(chi * np.exp(1j * w * ts)) * dt for w in omegas])
    weights = np.abs(profile) ** 2
    mean = np.sum(omegas * weights) / np.sum(weights)
    rms = math.sqrt(np.sum((omegas - mean) ** 2 * weights) / np.sum(weights))
    ratio = rms * width_t
    assert 0.1 <= ratio <= 10.0


def test_json_round_trip():
    mode = freq_mode(omega=1.25, t=-0.5, bw=0.75)
    data = mode.to_json_dict()
    assert data == {"omega_c": 1.25, "t_c": -0.5, "delta_omega": 0.75,
                    "shape": "rectangular_frequency"}
    assert SpectralMode.from_json_dict(data) == mode
