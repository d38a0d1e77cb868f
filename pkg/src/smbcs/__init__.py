"""Scattershot multiboson correlation sampling, simulated exactly at desk scale.

The package computes exact N-photon detection probabilities in random linear
interferometers with randomly multiplexed input spectra, samples from those
distributions, and evaluates the source-efficiency and success-probability
behavior of multiplexed heralded photon banks.
"""

__version__ = "0.1.0"

from .correlations import (
    DetectionMode,
    DetectionOutcome,
    InputConfiguration,
    ResolutionReport,
    amplitude_matrix,
    check_frequency_resolution,
    check_time_resolution,
    outcome_probability,
)
from .errors import (
    ConfigError,
    CostGuardError,
    DomainError,
    NumericGuardError,
    ResolutionError,
)
from .interferometer import (
    Interferometer,
    balanced_coupler,
    from_matrix,
    haar_random,
    load_unitary,
    save_unitary,
    submatrix,
)
from .permanent import perm_fast, perm_naive, perm_with_multiplicities
from .sampler import (
    ConditionalOutcomeSampler,
    GaussianEntryReport,
    OutcomeDistribution,
    SampleRecord,
    brute_force_distribution,
    draw_sample,
    expected_sample_distribution,
    gaussian_entry_diagnostics,
    total_variation_distance,
)
from .scattershot import (
    ExperimentPlan,
    SuccessCurve,
    asymptotic_threshold,
    binomial_tail_probability,
    compute_success_curve,
    regularized_incomplete_beta,
    success_probability_analytic,
    success_probability_mc,
    total_photon_statistics,
    total_photons_mc,
)
from .sources import (
    EmissionRecord,
    Flavor,
    InnerModeGrid,
    SpdcSource,
    assign_inner_mode,
    at_least_one_probability,
    delivery_probability,
    emit,
    gamma_for_at_least_one,
    herald_distribution,
    max_inner_modes,
    max_single_photon_probability,
    optimal_squeezing,
    pair_number_probability,
    rfm_grid,
    rtm_grid,
    single_photon_probability,
)
from .spectra import (
    SpectralMode,
    SpectralShape,
    frequency_amplitude,
    mode_overlap,
    temporal_amplitude,
)
