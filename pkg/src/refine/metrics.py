"""Evaluation metrics: precision, retrieval accuracy, RF iteration number.

Retrieval accuracy divides by the session scope rather than the batch size,
so it stays comparable across iterations whose batches shrink. It is
computed on the cumulative count of unique relevant items, which is what
makes the termination rule (stop when the count reaches the scope) line up
with accuracy hitting 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import MetricError, ParameterError


def precision(relevant_retrieved: int, retrieved: int) -> float:
    """Fraction of the retrieved items that were relevant."""
    if retrieved == 0:
        raise MetricError("precision is undefined when nothing was retrieved")
    if not 0 <= relevant_retrieved <= retrieved:
        raise ParameterError(
            f"relevant_retrieved={relevant_retrieved} outside [0, {retrieved}]"
        )
    return relevant_retrieved / retrieved


def retrieval_accuracy(cumulative_relevant: int, scope: int) -> float:
    """Cumulative relevant items over the session scope."""
    if scope < 1:
        raise ParameterError(f"scope must be >= 1, got {scope}")
    if not 0 <= cumulative_relevant <= scope:
        raise ParameterError(
            f"cumulative_relevant={cumulative_relevant} outside [0, {scope}]"
        )
    return cumulative_relevant / scope


def rf_iteration_number(accuracy_per_iteration: Sequence[float], max_iterations: int) -> int:
    """Smallest iteration whose accuracy reached 1, else ``max_iterations``."""
    for t, acc in enumerate(accuracy_per_iteration):
        if acc >= 1.0:
            return t
    return max_iterations


@dataclass
class SessionMetrics:
    """Per-iteration evaluation of one feedback session."""

    scope: int
    cumulative_relevant: list[int] = field(default_factory=list)
    precision_per_iteration: list[float] = field(default_factory=list)
    accuracy_per_iteration: list[float] = field(default_factory=list)
    rf_iteration_number: int | None = None  # set once the session completes

    def to_dict(self) -> dict:
        return {
            "scope": self.scope,
            "cumulative_relevant": list(self.cumulative_relevant),
            "precision_per_iteration": list(self.precision_per_iteration),
            "accuracy_per_iteration": list(self.accuracy_per_iteration),
            "rf_iteration_number": self.rf_iteration_number,
        }
