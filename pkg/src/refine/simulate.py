"""Simulated-user oracle and reproducible desk-scale experiment drivers.

The oracle marks an item relevant exactly when its ground-truth label
matches the query's, which stands in for a consistent human. Every driver
is a pure function of (dataset, seeds, config); reports serialize to
byte-identical JSON across runs once the wall-clock field is excluded.
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import Dataset, DatasetSplit, ItemRecord, read_feature_matrix
from .errors import ParameterError, ValidationError
from .export import export_pairs, write_pairs_csv
from .groups import FeedbackEvent, GroupStore, match_groups, record_session
from .ranking import rank
from .session import SessionConfig, SessionState, SessionStatus, start_session, submit_feedback


def generate_synthetic(
    labels: int,
    per_label: int,
    dim: int,
    separation: float,
    noise: float,
    seed: int,
) -> Dataset:
    """Gaussian label clusters with centroids at pairwise distance >= separation."""
    if labels < 1 or per_label < 1 or dim < 1:
        raise ParameterError("labels, per_label and dim must all be >= 1")
    if not (separation > 0 and noise > 0):
        raise ParameterError("separation and noise must be > 0")
    rng = np.random.default_rng(seed)
    centroids: list[np.ndarray] = []
    for _ in range(labels):
        for _attempt in range(10_000):
            candidate = rng.normal(0.0, separation, size=dim)
            if all(np.linalg.norm(candidate - c) >= separation for c in centroids):
                centroids.append(candidate)
                break
        else:
            raise ParameterError(
                f"could not place {labels} centroids at separation {separation} in {dim} dims"
            )
    items: list[ItemRecord] = []
    rows = np.empty((labels * per_label, dim))
    for li, centroid in enumerate(centroids):
        label = f"lab{li:03d}"
        block = centroid + rng.normal(0.0, noise, size=(per_label, dim))
        for j in range(per_label):
            rows[len(items)] = block[j]
            items.append(ItemRecord(id=f"{label}-{j:04d}", label=label))
    return Dataset(items=items, features=rows)


def oracle_feedback(batch_ids: Iterable[str], query_label: str, db: Dataset) -> set[str]:
    """Ids in the batch whose ground-truth label matches the query's."""
    return {i for i in batch_ids if db.label(i) == query_label}


def run_oracle_session(
    db: Dataset,
    query,
    query_label: str,
    cfg: SessionConfig,
    groups: GroupStore | None = None,
    session_id: str = "sim",
) -> SessionState:
    """Drive one session to completion with label-equality feedback."""
    state = start_session(query, db, cfg, session_id=session_id)
    while state.status is SessionStatus.AWAITING_FEEDBACK:
        batch_ids = [entry.id for entry in state.current_batch]
        submit_feedback(state, oracle_feedback(batch_ids, query_label, db), groups)
    return state


@dataclass
class ExperimentReport:
    """Serializable result of one experiment run."""

    kind: str
    config: dict
    seeds: dict
    baseline: dict | None = None
    checkpoints: list[dict] = field(default_factory=list)
    fractions: list[dict] = field(default_factory=list)
    wall_clock_seconds: float = 0.0

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "kind": self.kind,
            "config": self.config,
            "seeds": self.seeds,
            "baseline": self.baseline,
            "checkpoints": self.checkpoints,
            "fractions": self.fractions,
        }
        if include_timing:
            out["wall_clock_seconds"] = self.wall_clock_seconds
        return out

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"

    def canonical_json(self) -> str:
        """Byte-comparable serialization: everything except the wall clock."""
        return self.to_json(include_timing=False)

    def validate(self) -> None:
        """Raise if any report invariant is broken."""
        max_iter = self.config.get("max_iterations", 6)
        def check_mean(entry: dict) -> None:
            if not 0.0 <= entry["mean_accuracy"] <= 1.0:
                raise ValidationError(f"mean accuracy out of range: {entry}")
            if not 0.0 <= entry["mean_rf_iteration_number"] <= max_iter:
                raise ValidationError(f"mean iteration number out of range: {entry}")
        if self.baseline is not None:
            check_mean(self.baseline)
        positions = [c["after_queries"] for c in self.checkpoints]
        if positions != sorted(set(positions)):
            raise ValidationError(f"checkpoint positions not strictly increasing: {positions}")
        for entry in self.checkpoints:
            check_mean(entry)
        for row in self.fractions:
            for key in ("overall_precision", "in_sample_precision", "out_of_sample_precision"):
                value = row.get(key)
                if value is not None and not 0.0 <= value <= 1.0:
                    raise ValidationError(f"{key} out of range in row {row}")


def _evaluate_queries(
    dataset: Dataset,
    db: Dataset,
    query_ids: Sequence[str],
    cfg: SessionConfig,
    groups: GroupStore | None,
    seed_base: int,
) -> dict:
    """Mean accuracy and RF iteration number of oracle sessions over query_ids."""
    per_query = []
    for j, qid in enumerate(query_ids):
        query = qid if qid in db else dataset.vector(qid)
        state = run_oracle_session(
            db,
            query,
            dataset.label(qid),
            cfg.with_seed(seed_base + j),
            groups=groups,
            session_id=f"eval-{qid}",
        )
        m = state.metrics()
        per_query.append(
            {
                "query_id": qid,
                "accuracy": m.accuracy_per_iteration[-1] if m.accuracy_per_iteration else 0.0,
                "rf_iteration_number": m.rf_iteration_number,
            }
        )
    n = max(len(per_query), 1)
    return {
        "mean_accuracy": sum(q["accuracy"] for q in per_query) / n,
        "mean_rf_iteration_number": sum(q["rf_iteration_number"] for q in per_query) / n,
        "per_query": per_query,
    }


def run_baseline(
    dataset: Dataset,
    retrieval_ids: Sequence[str],
    query_ids: Sequence[str],
    cfg: SessionConfig,
) -> ExperimentReport:
    """Oracle-driven sessions without grouping; reports the two means."""
    started = time.perf_counter()
    db = dataset.subset(retrieval_ids)
    cfg = replace(cfg, grouping_enabled=False)
    report = ExperimentReport(
        kind="baseline",
        config={**cfg.to_dict(), "n_queries": len(query_ids), "n_retrieval": len(retrieval_ids)},
        seeds={"session": cfg.rng_seed},
        baseline=_evaluate_queries(dataset, db, query_ids, cfg, None, cfg.rng_seed),
    )
    report.wall_clock_seconds = time.perf_counter() - started
    report.validate()
    return report


def run_grouping_experiment(
    dataset: Dataset,
    split: DatasetSplit,
    cfg: SessionConfig,
    checkpoints: int = 5,
) -> ExperimentReport:
    """Stream validation queries through group-building sessions.

    The group store starts empty and grows as each validation session
    completes. At ``checkpoints`` equal intervals of the stream the store is
    frozen and the test queries are re-evaluated with group assistance; the
    report carries that trajectory next to the no-grouping baseline.
    """
    if checkpoints < 1:
        raise ParameterError(f"checkpoints must be >= 1, got {checkpoints}")
    started = time.perf_counter()
    db = dataset.subset(split.retrieval_db)
    grouped_cfg = replace(cfg, grouping_enabled=True)
    report = ExperimentReport(
        kind="grouping",
        config={
            **grouped_cfg.to_dict(),
            "checkpoints": checkpoints,
            "n_validation": len(split.validation),
            "n_test": len(split.test),
            "n_retrieval": len(split.retrieval_db),
        },
        seeds={"session": cfg.rng_seed},
        baseline=_evaluate_queries(
            dataset, db, split.test, replace(cfg, grouping_enabled=False), None, cfg.rng_seed
        ),
    )

    n = len(split.validation)
    boundaries = sorted({math.ceil(i * n / checkpoints) for i in range(1, checkpoints + 1)})
    if n == 0:
        boundaries = [0]  # nothing streamed: single checkpoint equals the baseline
    store = GroupStore()
    eval_seed = cfg.rng_seed + 1_000_000

    def checkpoint(after: int) -> dict:
        frozen = store.copy()
        entry = _evaluate_queries(dataset, db, split.test, grouped_cfg, frozen, eval_seed)
        entry.update(
            {
                "after_queries": after,
                "group_count": frozen.group_count,
                "grouped_items": len(frozen),
            }
        )
        return entry

    done = 0
    for boundary in boundaries:
        while done < boundary:
            qid = split.validation[done]
            query = qid if qid in db else dataset.vector(qid)
            state = run_oracle_session(
                db,
                query,
                dataset.label(qid),
                grouped_cfg.with_seed(cfg.rng_seed + 1 + done),
                groups=store,
                session_id=f"validation-{qid}",
            )
            record_session(store, state.relevant, match_groups(store, state.relevant))
            done += 1
        report.checkpoints.append(checkpoint(boundary))

    report.wall_clock_seconds = time.perf_counter() - started
    report.validate()
    return report


def _precision_at_scope(db: Dataset, query_id: str, scope: int) -> float:
    retrieved = rank(db.vector(query_id), db, None, exclude={query_id}, limit=scope)
    if not retrieved:
        return 0.0
    label = db.label(query_id)
    hits = sum(1 for entry in retrieved if db.label(entry.id) == label)
    return hits / len(retrieved)


def run_sampling_protocol(
    dataset: Dataset,
    fractions: Sequence[float],
    cfg: SessionConfig,
    encoder_swaps: Mapping[float, str | Path] | None = None,
    pairs_dir: str | Path | None = None,
) -> ExperimentReport:
    """Per sampled query fraction: log feedback, export pairs, score precision.

    For each fraction x, x of the database ids become query images; a
    single scope-sized retrieval per query is fed to the oracle and the
    resulting events become similar/dissimilar pairs. Precision over the
    whole database is then reported three ways: over the sampled queries
    (in-sample), the rest (out-of-sample) and everything (overall). A
    feature matrix registered in ``encoder_swaps`` for that fraction
    replaces the original one during scoring, which is the seam a retrained
    encoder plugs into; a missing swap file degrades to the original
    features with a warning.
    """
    started = time.perf_counter()
    encoder_swaps = dict(encoder_swaps or {})
    report = ExperimentReport(
        kind="sampling",
        config={**cfg.to_dict(), "fractions": [float(x) for x in fractions]},
        seeds={"session": cfg.rng_seed},
    )
    ids = dataset.ids
    n = len(ids)
    for x in fractions:
        if not 0.0 <= x <= 1.0:
            raise ParameterError(f"fractions must lie in [0, 1], got {x}")
        k = int(round(x * n))
        rng = random.Random(f"{cfg.rng_seed}:{x}")
        in_sample = sorted(rng.sample(ids, k))
        in_sample_set = set(in_sample)

        events = []
        for qid in in_sample:
            retrieved = rank(
                dataset.vector(qid), dataset, None, exclude={qid}, limit=cfg.scope
            )
            shown = tuple(entry.id for entry in retrieved)
            relevant = tuple(sorted(oracle_feedback(shown, dataset.label(qid), dataset)))
            events.append(
                FeedbackEvent(
                    session_id=f"sampling-{x}",
                    query_id=qid,
                    iteration=0,
                    shown=shown,
                    relevant=relevant,
                )
            )
        pairs = export_pairs(events)
        if pairs_dir is not None and pairs:
            out = Path(pairs_dir) / f"pairs_{int(round(x * 100)):03d}.csv"
            write_pairs_csv(pairs, out)

        warnings: list[str] = []
        eval_ds = dataset
        swap_path = encoder_swaps.get(x)
        if swap_path is not None:
            try:
                eval_ds = dataset.with_features(read_feature_matrix(swap_path))
            except FileNotFoundError:
                warnings.append(f"swap features {swap_path} missing; using original features")

        per_query = {qid: _precision_at_scope(eval_ds, qid, cfg.scope) for qid in ids}
        out_ids = [i for i in ids if i not in in_sample_set]
        row = {
            "sample_percent": round(x * 100, 6),
            "n_query_sample": k,
            "overall_precision": sum(per_query.values()) / n if n else None,
            "in_sample_precision": (
                sum(per_query[i] for i in in_sample) / k if k else None
            ),
            "out_of_sample_precision": (
                sum(per_query[i] for i in out_ids) / len(out_ids) if out_ids else None
            ),
            "similar_pairs": sum(1 for p in pairs if p.label == 1),
            "dissimilar_pairs": sum(1 for p in pairs if p.label == 0),
            "swap": str(swap_path) if swap_path is not None else None,
            "warnings": warnings,
        }
        report.fractions.append(row)

    report.wall_clock_seconds = time.perf_counter() - started
    report.validate()
    return report
