"""Adjusted empirical likelihood inference for long-memory ARFIMA time series."""

from arfima_ael.model import (
    DimensionMismatchError,
    InvalidParameterError,
    ModelSpec,
    ParamVector,
    ValidityReport,
    log_spectral_gradient,
    spectral_density,
    validate,
)

__all__ = [
    "DimensionMismatchError",
    "InvalidParameterError",
    "ModelSpec",
    "ParamVector",
    "ValidityReport",
    "log_spectral_gradient",
    "spectral_density",
    "validate",
]
