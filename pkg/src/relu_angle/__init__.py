"""Angle statistics of deep fully connected ReLU networks at random initialization."""

__version__ = "0.1.0"

from .bessel import bessel_P, bessel_Q
from .dynamics import (LayerLaw, RMoments, asymptotic_law, infinite_width_update, layer_law,
                       moments_of_R, predict_trajectory, rho, simple_update)
from .errors import AccuracyNotReached, BudgetExceeded, ConsistencyError, DomainError, SchemaError
from .jfuncs import j_base, j_closed, j_recursive, phi_moment
from .oracle import j_quadrature, mc_expectation, mc_R_statistics
from .simulate import NetworkConfig, run_ensemble, run_trial
from .stats import KSResult, ks_test_normal, mean_ci, variance_ci

__all__ = [
    "bessel_P", "bessel_Q", "LayerLaw", "RMoments", "asymptotic_law", "infinite_width_update",
    "layer_law", "moments_of_R", "predict_trajectory", "rho", "simple_update", "AccuracyNotReached",
    "BudgetExceeded", "ConsistencyError", "DomainError", "SchemaError", "j_base", "j_closed",
    "j_recursive", "phi_moment", "j_quadrature", "mc_expectation", "mc_R_statistics",
    "NetworkConfig", "run_ensemble", "run_trial", "KSResult", "ks_test_normal", "mean_ci",
    "variance_ci",
]
