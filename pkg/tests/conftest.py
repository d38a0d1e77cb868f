import numpy as np
import pytest

from smbcs.spectra import SpectralMode, SpectralShape


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def freq_mode(omega=5.0, t=0.0, bw=1.0):
    return SpectralMode(omega, t, bw, SpectralShape.RECTANGULAR_FREQUENCY)


def temporal_mode(omega=5.0, t=0.0, bw=1.0):
    return SpectralMode(omega, t, bw, SpectralShape.RECTANGULAR_TEMPORAL)
