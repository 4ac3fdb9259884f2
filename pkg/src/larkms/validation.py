"""Input validation helpers for the estimator API."""

from __future__ import annotations

import numpy as np


def check_tof_grid(X) -> np.ndarray:
    """Coerce X to a strictly increasing 1-d float TOF array.

    Accepts a 1-d array or a single-column 2-d array (the sklearn
    convention).
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected a single TOF feature, got shape {arr.shape}")
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"expected 1-d or (n, 1) TOF input, got shape {arr.shape}")
    if arr.size < 2:
        raise ValueError("need at least 2 samples")
    if not np.all(np.isfinite(arr)):
        raise ValueError("TOF values must be finite")
    if not np.all(np.diff(arr) > 0):
        raise ValueError("TOF values must be strictly increasing")
    return arr


def check_intensities(y, n: int) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or arr.size != n:
        raise ValueError(f"intensities must be 1-d with {n} entries")
    if not np.all(np.isfinite(arr)):
        raise ValueError("intensities must be finite")
    if np.any(arr < 0):
        raise ValueError("intensities must be nonnegative")
    return arr


def check_positive(value, name: str) -> float:
    if value is None:
        raise ValueError(f"{name} must be set (got None)")
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value
