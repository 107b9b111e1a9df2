"""Small input-validation helpers shared across the package."""

import numpy as np


def as_float_array(x, name="array"):
    """Coerce to a float ndarray and require every entry to be finite."""
    arr = np.asarray(x, dtype=float)
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_sequence_2d(x, name="sequence"):
    """Coerce a sequence of vectors (or scalars) to a 2-D float array."""
    arr = as_float_array(x, name)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got ndim={arr.ndim}")
    return arr


def check_matrix(x, n_cols, name="X"):
    """Validate a finite 2-D array with a fixed column count."""
    arr = as_float_array(x, name)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[1] != n_cols:
        raise ValueError(f"{name} must have {n_cols} columns, got {arr.shape[1]}")
    return arr


def check_labels(y, n, name="y"):
    """Validate an integer label vector over the three experience states."""
    arr = np.asarray(y)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
    arr = arr.astype(int)
    if not np.all(np.isin(arr, (0, 1, 2))):
        raise ValueError(f"{name} must contain only state labels 0, 1, 2")
    return arr


def check_positive(value, name):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value
