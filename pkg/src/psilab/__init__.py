"""Numerical toolkit for primes in short intervals: von Mangoldt tables,
exponential sums over primes, short-interval variances, pair correlation of
zeta zeros and the asymptotic models that tie them together."""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    FormatError,
    MonotonicityError,
    NumericError,
    ParameterError,
    PsilabError,
    RangeError,
    ZeroFileError,
)
from .primes import MangoldtTable, build_mangoldt_table, cached_table, psi, psi_rh_ratio

__all__ = [
    "CapacityError",
    "FormatError",
    "MangoldtTable",
    "MonotonicityError",
    "NumericError",
    "ParameterError",
    "PsilabError",
    "RangeError",
    "ZeroFileError",
    "build_mangoldt_table",
    "cached_table",
    "psi",
    "psi_rh_ratio",
]
