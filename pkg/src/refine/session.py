"""One relevance-feedback session: retrieval, feedback, weight updates.

The loop: iteration 0 retrieves the ``scope`` nearest items under uniform
weights; the caller marks each batch item relevant or non-relevant; weights
are recomputed from the cumulative relevant/non-relevant statistics and the
next batch of ``scope - |relevant so far|`` new items is retrieved,
excluding everything already shown. The session completes when the
relevant count reaches the scope, the iteration cap is hit, or the
candidates run out.

Weight formulas, with sigma the per-feature population std over the
combined relevant+non-relevant rows and sigma_rel over the relevant rows
only:

* SIGMA_RATIO:   w_j = sigma_j / max(sigma_rel_j, delta)
* DISCRIMINANT:  w_j = delta_ratio_j * sigma_j / max(sigma_rel_j, delta)

where delta_ratio_j = 1 - (fraction of non-relevant rows whose feature j
falls inside the closed [min, max] range of the relevant rows). Both sets
accumulate over the whole session.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset
from .errors import FeedbackError, ParameterError, SessionError, StateError
from .groups import FeedbackEvent, GroupStore, group_fill, match_groups
from .metrics import SessionMetrics, precision, retrieval_accuracy, rf_iteration_number
from .ranking import RankedEntry, rank, weighted_l1
from .validation import as_vector


class WeightMode(str, Enum):
    SIGMA_RATIO = "sigma_ratio"
    DISCRIMINANT = "discriminant"


class SessionStatus(str, Enum):
    AWAITING_FEEDBACK = "awaiting_feedback"
    COMPLETE = "complete"


@dataclass(frozen=True)
class SessionConfig:
    scope: int = 20
    max_iterations: int = 6
    delta: float = 1e-6
    weight_mode: WeightMode = WeightMode.DISCRIMINANT
    grouping_enabled: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if self.scope < 1:
            raise ParameterError(f"scope must be >= 1, got {self.scope}")
        if self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.delta > 0:
            raise ParameterError(f"delta must be > 0, got {self.delta}")

    def with_seed(self, rng_seed: int) -> "SessionConfig":
        return replace(self, rng_seed=rng_seed)

    def to_dict(self) -> dict:
        return {
            "scope": self.scope,
            "max_iterations": self.max_iterations,
            "delta": self.delta,
            "weight_mode": self.weight_mode.value,
            "grouping_enabled": self.grouping_enabled,
            "rng_seed": self.rng_seed,
        }


@dataclass
class FeatureStats:
    """Per-feature statistics behind one weight update."""

    sigma: np.ndarray
    sigma_rel: np.ndarray
    dominant_min: np.ndarray
    dominant_max: np.ndarray
    delta_ratio: np.ndarray


def discriminant_ratio(
    relevant_values: Sequence[float], nonrelevant_values: Sequence[float]
) -> tuple[float, tuple[float, float]]:
    """Discriminating power of one feature, plus its dominant range.

    The dominant range is the closed [min, max] interval of the feature over
    the relevant items; the ratio is 1 minus the fraction of non-relevant
    items falling inside it. An empty non-relevant set counts no evidence
    against the feature, so the ratio is 1.
    """
    rel = as_vector(relevant_values, name="relevant_values")
    if rel.shape[0] == 0:
        raise ParameterError("relevant_values must be non-empty")
    lo, hi = float(rel.min()), float(rel.max())
    non = as_vector(nonrelevant_values, name="nonrelevant_values")
    if non.shape[0] == 0:
        return 1.0, (lo, hi)
    inside = int(np.count_nonzero((non >= lo) & (non <= hi)))
    return 1.0 - inside / non.shape[0], (lo, hi)


def feature_stats(relevant_rows: np.ndarray, nonrelevant_rows: np.ndarray) -> FeatureStats:
    """Vectorized per-feature statistics over the two cumulative sets."""
    if relevant_rows.shape[0] < 1:
        raise ParameterError("need at least one relevant row")
    combined = (
        np.vstack([relevant_rows, nonrelevant_rows])
        if nonrelevant_rows.shape[0]
        else relevant_rows
    )
    sigma = combined.std(axis=0, ddof=0)
    sigma_rel = relevant_rows.std(axis=0, ddof=0)
    lo = relevant_rows.min(axis=0)
    hi = relevant_rows.max(axis=0)
    if nonrelevant_rows.shape[0]:
        inside = ((nonrelevant_rows >= lo) & (nonrelevant_rows <= hi)).sum(axis=0)
        ratio = 1.0 - inside / nonrelevant_rows.shape[0]
    else:
        ratio = np.ones_like(sigma)
    return FeatureStats(
        sigma=sigma, sigma_rel=sigma_rel, dominant_min=lo, dominant_max=hi, delta_ratio=ratio
    )


def compute_weights(
    relevant_ids: Iterable[str],
    nonrelevant_ids: Iterable[str],
    db: Dataset,
    cfg: SessionConfig,
) -> np.ndarray:
    """Per-feature weights from the cumulative feedback sets (see module doc)."""
    relevant = sorted(set(relevant_ids))
    nonrelevant = sorted(set(nonrelevant_ids))
    if not relevant:
        raise ParameterError("compute_weights needs at least one relevant id")
    stats = feature_stats(
        db.rows_for(relevant),
        db.rows_for(nonrelevant) if nonrelevant else np.empty((0, db.dim)),
    )
    weights = stats.sigma / np.maximum(stats.sigma_rel, cfg.delta)
    if cfg.weight_mode is WeightMode.DISCRIMINANT:
        weights = stats.delta_ratio * weights
    return weights


@dataclass
class SessionState:
    """Mutable state of one session; touched by exactly one caller at a time."""

    session_id: str
    config: SessionConfig
    db: Dataset
    query_vector: np.ndarray
    query_id: str | None
    iteration: int = 0
    status: SessionStatus = SessionStatus.AWAITING_FEEDBACK
    batches: list[list[RankedEntry]] = field(default_factory=list)
    relevant: set[str] = field(default_factory=set)
    nonrelevant: set[str] = field(default_factory=set)
    weights: np.ndarray | None = None
    events: list[FeedbackEvent] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    group_filled: set[str] = field(default_factory=set)
    _rng: random.Random = field(default_factory=random.Random, repr=False)

    @property
    def current_batch(self) -> list[RankedEntry]:
        return self.batches[-1] if self.batches else []

    @property
    def shown(self) -> set[str]:
        return {entry.id for batch in self.batches for entry in batch}

    def excluded_ids(self) -> set[str]:
        out = self.shown
        if self.query_id is not None:
            out.add(self.query_id)
        return out

    def metrics(self) -> SessionMetrics:
        """Per-iteration metrics over the batches that have received feedback."""
        m = SessionMetrics(scope=self.config.scope)
        cumulative = 0
        for event in self.events:
            marked = len(event.relevant)
            cumulative += marked
            m.cumulative_relevant.append(cumulative)
            m.precision_per_iteration.append(precision(marked, len(event.shown)))
            m.accuracy_per_iteration.append(
                retrieval_accuracy(cumulative, self.config.scope)
            )
        if self.status is SessionStatus.COMPLETE:
            m.rf_iteration_number = rf_iteration_number(
                m.accuracy_per_iteration, self.config.max_iterations
            )
        return m


def start_session(
    query,
    db: Dataset,
    cfg: SessionConfig | None = None,
    session_id: str = "session",
) -> SessionState:
    """Open a session and retrieve iteration 0 under uniform weights.

    ``query`` is either an item id (the item is then permanently excluded
    from its own batches) or an external feature vector of matching
    dimensionality.
    """
    cfg = cfg or SessionConfig()
    if len(db) == 0 or db.features is None:
        raise SessionError("cannot start a session on an empty dataset")
    if isinstance(query, str):
        query_id = query
        query_vector = db.vector(query)  # raises ValidationError for unknown ids
    else:
        query_id = None
        query_vector = as_vector(query, dim=db.dim, name="query")
    state = SessionState(
        session_id=session_id,
        config=cfg,
        db=db,
        query_vector=query_vector,
        query_id=query_id,
        weights=np.ones(db.dim),
        _rng=random.Random(cfg.rng_seed),
    )
    batch = rank(query_vector, db, state.weights, exclude=state.excluded_ids(), limit=cfg.scope)
    if not batch:
        raise SessionError("no candidates available for iteration 0")
    if len(batch) < cfg.scope:
        state.warnings.append(
            f"iteration 0 returned {len(batch)} of {cfg.scope} requested items"
        )
    state.batches.append(batch)
    return state


def submit_feedback(
    state: SessionState,
    relevant_ids: Iterable[str],
    groups: GroupStore | None = None,
) -> SessionState:
    """Ingest one round of feedback and retrieve the next batch.

    ``relevant_ids`` must be a subset of the current batch; the rest of the
    batch is recorded as non-relevant. When grouping is enabled and the
    cumulative relevant set matches stored groups, sampled group members
    take the leading positions of the next batch and re-weighted retrieval
    fills the remainder.
    """
    if state.status is not SessionStatus.AWAITING_FEEDBACK:
        raise StateError("session is complete; no further feedback accepted")
    batch_ids = [entry.id for entry in state.current_batch]
    marked = set(relevant_ids)
    stray = sorted(marked - set(batch_ids))
    if stray:
        raise FeedbackError(f"ids not in the current batch: {stray}")

    state.relevant |= marked
    state.nonrelevant |= set(batch_ids) - marked
    state.events.append(
        FeedbackEvent(
            session_id=state.session_id,
            query_id=state.query_id,
            iteration=state.iteration,
            shown=tuple(batch_ids),
            relevant=tuple(sorted(marked)),
        )
    )

    cfg = state.config
    if len(state.relevant) >= cfg.scope or state.iteration + 1 >= cfg.max_iterations:
        state.status = SessionStatus.COMPLETE
        return state

    if state.relevant:
        state.weights = compute_weights(state.relevant, state.nonrelevant, state.db, cfg)
    # with no relevant examples yet the previous weights stay in force

    needed = cfg.scope - len(state.relevant)
    exclude = state.excluded_ids()
    lead: list[RankedEntry] = []
    if cfg.grouping_enabled and groups is not None and state.relevant:
        roots = match_groups(groups, state.relevant)
        if roots:
            # members outside this session's database are never eligible
            foreign = {m for r in roots for m in groups.members(r) if m not in state.db}
            fill_ids = group_fill(
                groups,
                roots,
                needed,
                exclude=exclude | foreign,
                rng_seed=state._rng.randrange(2**32),
            )
            lead = [
                RankedEntry(id=i, distance=weighted_l1(state.db.vector(i), state.query_vector, state.weights))
                for i in fill_ids
            ]
            state.group_filled |= set(fill_ids)
    ranked = rank(
        state.query_vector,
        state.db,
        state.weights,
        exclude=exclude | {entry.id for entry in lead},
        limit=needed - len(lead),
    )
    next_batch = lead + ranked
    if not next_batch:
        state.warnings.append("candidates exhausted; completing early")
        state.status = SessionStatus.COMPLETE
        return state
    if len(next_batch) < needed:
        state.warnings.append(
            f"iteration {state.iteration + 1} returned {len(next_batch)} of {needed} requested items"
        )
    state.batches.append(next_batch)
    state.iteration += 1
    return state
