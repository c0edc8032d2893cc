"""Dimensionality reduction to the top principal components.

Retrieval runs on PCA-cropped vectors to dodge the curse of high
dimensionality; the reducer is an sklearn-compatible transformer so it
composes with ordinary pipelines.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import FormatError, ParameterError, ShapeError
from .validation import as_matrix


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Make each component's largest-magnitude entry positive (first index on ties)."""
    out = components.copy()
    for i, row in enumerate(out):
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            out[i] = -row
    return out


class PcaReducer(BaseEstimator, TransformerMixin):
    """Project vectors onto the top ``n_components`` principal axes.

    Fitting takes a thin SVD of the mean-centered rows; the resulting axes
    equal the top eigenvectors of the sample covariance (ddof=1). A
    deterministic sign convention keeps runs reproducible. With
    ``clamp=True`` an oversized ``n_components`` is silently reduced to
    ``min(rows - 1, cols)`` instead of raising.

    Attributes after fit: ``mean_`` (d,), ``components_`` (k, d) with
    orthonormal rows, ``explained_variance_`` (k,) non-increasing.
    """

    def __init__(self, n_components: int = 100, clamp: bool = False):
        self.n_components = n_components
        self.clamp = clamp

    def fit(self, X, y=None):
        X = as_matrix(X, name="X")
        rows, cols = X.shape
        if rows < 2:
            raise ParameterError(f"need at least 2 rows to fit, got {rows}")
        k = int(self.n_components)
        limit = min(rows - 1, cols)
        if self.clamp:
            k = max(1, min(k, limit))
        if not 1 <= k <= limit:
            raise ParameterError(
                f"n_components={k} out of range [1, {limit}] for a {rows}x{cols} matrix"
            )
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        _, s, vt = np.linalg.svd(centered, full_matrices=False)
        self.components_ = _fix_signs(vt[:k])
        self.explained_variance_ = (s[:k] ** 2) / (rows - 1)
        return self

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        X = as_matrix(X, cols=self.mean_.shape[0], name="X")
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, Z) -> np.ndarray:
        self._check_fitted()
        Z = as_matrix(Z, cols=self.components_.shape[0], name="Z")
        return Z @ self.components_ + self.mean_

    def _check_fitted(self) -> None:
        if not hasattr(self, "components_"):
            raise ParameterError("PcaReducer is not fitted")

    def save(self, path: str | Path) -> None:
        """Persist as a text block: header, mean row, component rows, variance row."""
        self._check_fitted()
        k, d = self.components_.shape
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"PCA1 {k} {d}\n")
            fh.write(" ".join(repr(float(v)) for v in self.mean_) + "\n")
            for row in self.components_:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
            fh.write(" ".join(repr(float(v)) for v in self.explained_variance_) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PcaReducer":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 3 or header[0] != "PCA1":
                raise FormatError(f"{path}: line 1: expected header 'PCA1 <k> <d>'")
            k, d = int(header[1]), int(header[2])
            mean = np.array([float(v) for v in fh.readline().split()], dtype=np.float64)
            if mean.shape != (d,):
                raise ShapeError(f"{path}: mean row has {mean.shape[0]} values, expected {d}")
            comps = np.empty((k, d), dtype=np.float64)
            for i in range(k):
                row = [float(v) for v in fh.readline().split()]
                if len(row) != d:
                    raise ShapeError(f"{path}: component row {i} has {len(row)} values")
                comps[i] = row
            var = np.array([float(v) for v in fh.readline().split()], dtype=np.float64)
            if var.shape != (k,):
                raise ShapeError(f"{path}: variance row has {var.shape[0]} values, expected {k}")
        model = cls(n_components=k)
        model.mean_ = mean
        model.components_ = comps
        model.explained_variance_ = var
        return model


def fit_pca(matrix, k: int) -> PcaReducer:
    """Functional alias: fit a reducer with exactly ``k`` components."""
    return PcaReducer(n_components=k).fit(matrix)
