"""Linear filter model of nonlinear interference driven by symbol energies."""

from .analysis import (
    aggregate_energy,
    band_mean_db,
    energy_spectrum,
    filter_bandwidth_3db,
    frequency_response,
    loglog_slope,
    rds,
    write_spectrum_csv,
)
from .distortion import DistortionField, correlate, predict_distortion, predict_received, simplified_distortion
from .filters import NliFilterBank, assemble_taps, bank_from_filter, build_filter_bank, single_tap_bank
from .kernel import (
    NYQUIST_T0_FACTOR,
    PerturbationKernel,
    QuadratureRule,
    axis_coefficients,
    compute_kernel,
    perturbation_coefficient,
)
