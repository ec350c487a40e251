"""Sparse vector functional autoregression."""

from ._core import (
    DataError,
    DimensionError,
    Error,
    NonStationaryError,
    NumericalError,
    UsageError,
    __version__,
    figure1,
    fit,
    run_cli,
    simulate,
    spectral_radius,
    stability,
    stationary_covariance,
)

__all__ = [
    "DataError",
    "DimensionError",
    "Error",
    "NonStationaryError",
    "NumericalError",
    "UsageError",
    "__version__",
    "figure1",
    "fit",
    "run_cli",
    "simulate",
    "spectral_radius",
    "stability",
    "stationary_covariance",
]
