"""Experiments that check the regularity laws of operator-scaling fields."""
from .checks import (dims_experiment, example62_experiment, oracle_variogram_1d, scaling_experiment,
                     truncation_experiment)
from .dimensions import DimensionReport, boundary_continuity, dimensions
from .example62 import alpha_argmin, alpha_theta, example62_curves
from .modulus import ModulusReport, band_split_statistics, directional_modulus_example62, estimate_lil, estimate_umc
from .report import ExperimentReport, Gate
from .slnd import SlndReport, slnd_experiment, slnd_ratio

__all__ = [
    "DimensionReport", "ExperimentReport", "Gate", "ModulusReport", "SlndReport",
    "alpha_argmin", "alpha_theta", "band_split_statistics", "boundary_continuity", "dimensions",
    "dims_experiment", "directional_modulus_example62", "estimate_lil", "estimate_umc", "example62_curves",
    "example62_experiment", "oracle_variogram_1d", "scaling_experiment", "slnd_experiment", "slnd_ratio",
    "truncation_experiment",
]
