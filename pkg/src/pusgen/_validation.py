"""Input validation helpers shared by the estimators and the functional API."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DimensionMismatch

HOURS = 24


def check_vector(x, dim, name="vector"):
    """Return ``x`` as a finite 1-D float array of length ``dim``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise DimensionMismatch(f"{name} has shape {arr.shape}, expected ({dim},)")
    return arr


def check_points(X, dim=None, name="points", min_samples=1):
    """Return ``X`` as a finite 2-D float array, optionally checking its width."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1 and dim is not None and arr.shape[0] == dim:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"{name} have {arr.shape[1]} columns, expected {dim}")
    return check_array(arr, ensure_min_samples=min_samples, input_name=name)


def frozen(arr):
    """Read-only float copy; model objects are shared across threads."""
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out
