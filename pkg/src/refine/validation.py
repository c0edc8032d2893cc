"""Input validation helpers for array-like arguments.

Every public entry point funnels its numeric inputs through these checks so
shape and finiteness problems surface as typed errors instead of numpy
broadcasting accidents.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError, ValidationError


def as_vector(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float64 array, optionally enforcing its length."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ShapeError(f"{name} has length {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def as_matrix(x, cols: int | None = None, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array, optionally enforcing the column count."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if cols is not None and arr.shape[1] != cols:
        raise ShapeError(f"{name} has {arr.shape[1]} columns, expected {cols}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def as_weights(w, dim: int, name: str = "weights") -> np.ndarray:
    """Validate a per-feature weight vector: length ``dim``, finite, >= 0."""
    arr = as_vector(w, dim=dim, name=name)
    if np.any(arr < 0):
        raise ValidationError(f"{name} contains negative entries")
    return arr
