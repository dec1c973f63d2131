"""Gaussian continuous-variable evolutions and correlation-backflow witnesses."""

from .channels import (GaussianChannel, apply, compose, embed_local, intermediate_map, is_cptp,
                       is_cptp_single_mode, is_eb, is_gib)
from .errors import CVError
from .evolutions import (Evolution, NmVerdict, classical_noise, is_markovian_at, lossy, noise_profile_oscillating,
                         noise_profile_rational, noise_profile_rational_scaled)
from .qbm import QbmCoefficients, QbmParams, as_evolution, coefficients, evolve_covariance, spectral_density
from .symplectic import (Bipartition, CovarianceMatrix, ghz_w_state, is_physical, schur_complement,
                         symplectic_eigenvalues, symplectic_form, two_mode_squeezed)
from .witnesses import BackflowReport, WitnessTrace, detect_backflows, entanglement_ppt, steerability

__version__ = "0.1.0"
