"""Small input-validation helpers used across modules."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, LengthMismatch, NonFiniteValue

# Norms below this are treated as zero; well under any float32 signal.
ZERO_NORM_EPS = 1e-12


def as_float_matrix(x, name: str, dtype=np.float32) -> np.ndarray:
    """Coerce *x* to a 2-D contiguous float array, checking finiteness."""
    arr = np.ascontiguousarray(x, dtype=dtype)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    check_finite(arr, name)
    return arr


def check_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{name} contains NaN or infinite values")


def check_vector(x, name: str, dtype=np.float64) -> np.ndarray:
    """Coerce *x* to a 1-D float array, checking finiteness."""
    arr = np.ascontiguousarray(x, dtype=dtype)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    check_finite(arr, name)
    return arr


def check_same_length(a, b, name_a: str, name_b: str) -> None:
    if len(a) != len(b):
        raise LengthMismatch(
            f"{name_a} has length {len(a)} but {name_b} has length {len(b)}"
        )


def check_index(i: int, n: int, name: str) -> int:
    i = int(i)
    if not 0 <= i < n:
        raise IndexError(f"{name} {i} out of range [0, {n})")
    return i


def check_positive_int(value, name: str) -> int:
    v = int(value)
    if v < 1:
        raise ValueError(f"{name} must be a positive integer, got {value}")
    return v
