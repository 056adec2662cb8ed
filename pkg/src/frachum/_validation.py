"""Input checks shared by the estimator front end."""

from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_array, check_is_fitted

from frachum.errors import DomainError, GridMismatchError

__all__ = ["check_initial_states", "check_is_fitted", "check_positive", "check_positive_int"]


def check_positive(name: str, value) -> float:
    v = float(value)
    if not (math.isfinite(v) and v > 0.0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return v


def check_positive_int(name: str, value, minimum: int = 1) -> int:
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_initial_states(Y0, n_modes: int) -> np.ndarray:
    """Validate a batch of initial states given as modal coefficients.

    Accepts one state (1-D) or a batch (2-D, one state per row) and always
    returns a 2-D float array.
    """
    arr = np.asarray(Y0, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    arr = check_array(arr, dtype=float, ensure_2d=True)
    if arr.shape[1] != n_modes:
        raise GridMismatchError(
            f"initial states have {arr.shape[1]} coefficients, the basis has {n_modes} modes"
        )
    return arr
