"""Small input-validation helpers used at the public API boundary."""

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput


def as_float_array(value, name, shape=None):
    """Coerce to a float64 ndarray, optionally enforcing an exact shape."""
    arr = np.asarray(value, dtype=float)
    if shape is not None and arr.shape != tuple(shape):
        raise DimensionMismatch(
            f"{name} has shape {arr.shape}, expected {tuple(shape)}"
        )
    return arr


def check_finite(value, name):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains NaN or infinite entries")
    return arr


def check_positive_int(value, name, minimum=1):
    if int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
