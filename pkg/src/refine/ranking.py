"""Weighted-L1 ranking of database items against a query vector.

An exhaustive scan: at the scale this engine targets (tens of thousands of
items, ~100 dims) brute force is exact and fast, and exactness is what the
oracle tests demand. Ties in distance break by ascending item id so runs
are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset
from .errors import ParameterError, ValidationError
from .validation import as_vector, as_weights


@dataclass(frozen=True)
class RankedEntry:
    id: str
    distance: float


def weighted_l1(a, b, w) -> float:
    """Sum over features of w_j * |a_j - b_j|."""
    a = as_vector(a, name="a")
    b = as_vector(b, dim=a.shape[0], name="b")
    w = as_weights(w, dim=a.shape[0])
    return float(np.abs(a - b) @ w)


def rank_rows(
    query: np.ndarray,
    features: np.ndarray,
    ids: Sequence[str],
    weights: np.ndarray | None = None,
    exclude: Iterable[str] = (),
    limit: int = 20,
) -> list[RankedEntry]:
    """Rank arbitrary feature rows; the Dataset-free core of :func:`rank`."""
    if limit < 0:
        raise ParameterError(f"limit must be >= 0, got {limit}")
    query = as_vector(query, dim=features.shape[1], name="query")
    if weights is None:
        weights = np.ones(features.shape[1])
    else:
        weights = as_weights(weights, dim=features.shape[1])
    if limit == 0 or features.shape[0] == 0:
        return []

    distances = np.abs(features - query) @ weights
    excluded = set(exclude)
    id_array = np.asarray(list(ids))  # fixed-width unicode, compares like str
    if excluded:
        keep = np.fromiter((i not in excluded for i in ids), dtype=bool, count=len(ids))
        if not keep.any():
            return []
        distances = distances[keep]
        id_array = id_array[keep]
    # lexsort: primary key = distance, ties resolved by ascending id
    order = np.lexsort((id_array, distances))[:limit]
    return [RankedEntry(id=str(id_array[i]), distance=float(distances[i])) for i in order]


def rank(
    query,
    db: Dataset,
    weights=None,
    exclude: Iterable[str] = (),
    limit: int = 20,
) -> list[RankedEntry]:
    """The ``limit`` database items nearest to ``query`` under weighted L1.

    Excluded ids never appear; fewer than ``limit`` entries come back only
    when the non-excluded candidates run out.
    """
    if db.features is None:
        raise ValidationError("dataset has no features attached")
    return rank_rows(
        np.asarray(query, dtype=np.float64),
        db.features,
        db.ids,
        weights=weights,
        exclude=exclude,
        limit=limit,
    )
