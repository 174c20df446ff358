"""Input validation helpers shared across estimators and functions."""

from __future__ import annotations

import numpy as np

from .errors import LengthMismatchError


def as_float_matrix(X, name: str = "X", *, copy: bool = False) -> np.ndarray:
    """Coerce to a finite 2-D float64 array.

    Raises ValueError on wrong rank or non-finite entries.
    """
    arr = np.array(X, dtype=np.float64, copy=copy, order="C") if copy \
        else np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_float_vector(x, name: str = "x") -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_equal_length(a, b, what: str = "sequences") -> None:
    if len(a) != len(b):
        raise LengthMismatchError(
            f"{what} have different lengths: {len(a)} vs {len(b)}"
        )


def check_positive(value, name: str) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
