"""Operator-scaling Gaussian random fields: geometry, covariance, sampling and checks."""
from .covariance import (FULL_BAND, PROFILES, FieldModel, FrequencyBand, QuadratureProfile, covariance,
                         covariance_matrix, variogram)
from .errors import (CapacityError, CertificationError, ConfigError, DomainError, NumericError, OpscaleError,
                     QuadratureError)
from .exponent import ExponentSpec, HVector, JordanBlock, h_vector, matrix_power
from .psi import HomogeneousPsi, certify, make_custom_psi, make_tau_dual_psi
from .quasimetric import PolarCoordinates, e_norm, polar_decompose, tau
from .sampler import Method, Realization, replicate, sample_cholesky, sample_spectral
from .specs import named_spec

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "CertificationError", "ConfigError", "DomainError", "ExponentSpec", "FULL_BAND",
    "FieldModel", "FrequencyBand", "HVector", "HomogeneousPsi", "JordanBlock", "Method", "NumericError",
    "OpscaleError", "PROFILES", "PolarCoordinates", "QuadratureError", "QuadratureProfile", "Realization",
    "certify", "covariance", "covariance_matrix", "e_norm", "h_vector", "make_custom_psi", "make_tau_dual_psi",
    "matrix_power", "named_spec", "polar_decompose", "replicate", "sample_cholesky", "sample_spectral", "tau",
    "variogram",
]
