"""Persistence exponents for the pursuit problem of two squared Bessel processes."""

from .theta import ProcessParams, ThetaResult, f_ab, f_ab_closed, find_theta, theta_grid, theta_small_alpha

__version__ = "0.1.0"

__all__ = [
    "ProcessParams",
    "ThetaResult",
    "f_ab",
    "f_ab_closed",
    "find_theta",
    "theta_grid",
    "theta_small_alpha",
]
