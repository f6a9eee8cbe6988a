"""Legendre series estimation of a function on [-1, 1] from noisy power moments."""

__version__ = "0.1.0"

from .estimator import (
    DEFAULT_ALPHA,
    CoeffEstimate,
    LegendreMomentEstimator,
    MiseBreakdown,
    SeriesFunction,
    analytic_mise,
    estimate_coeffs,
    exact_coeffs,
    mise_upper_bound,
    reconstruct,
    truncation_level,
)
from .legendre import LegendrePoly, LegendreTable, build_legendre, evaluate
from .minimax import fano_check, rate_experiment, vg_code
from .model import MomentData, forward_moments, simulate, to_sequence_model
from .sobolev import SobolevFunction, make_test_function

__all__ = [
    "DEFAULT_ALPHA",
    "CoeffEstimate",
    "LegendreMomentEstimator",
    "LegendrePoly",
    "LegendreTable",
    "MiseBreakdown",
    "MomentData",
    "SeriesFunction",
    "SobolevFunction",
    "analytic_mise",
    "build_legendre",
    "estimate_coeffs",
    "evaluate",
    "exact_coeffs",
    "fano_check",
    "forward_moments",
    "make_test_function",
    "mise_upper_bound",
    "rate_experiment",
    "reconstruct",
    "simulate",
    "to_sequence_model",
    "truncation_level",
    "vg_code",
]
