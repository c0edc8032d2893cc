"""HTTP surface for interactive sessions, groups, metrics and exports.

One process serves one dataset. Sessions live in memory; the group store
and the feedback-event log are written through to disk on every session
completion, so a crash between sessions loses at most the in-flight one.
Identical request sequences against identical seeds produce identical
responses.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__
from .data import Dataset
from .errors import ExportError, FeedbackError, RefineError, StateError
from .export import export_class_dataset, export_pairs, write_class_manifest, write_pairs_csv
from .groups import GroupStore, append_events, load_events, match_groups, record_session
from .pca import PcaReducer
from .session import SessionConfig, SessionState, SessionStatus, WeightMode, start_session, submit_feedback


class CreateSessionRequest(BaseModel):
    query_id: str | None = None
    query_vector: list[float] | None = None
    scope: int | None = None
    max_iterations: int | None = None
    weight_mode: str | None = None
    grouping: bool | None = None
    seed: int | None = None


class FeedbackRequest(BaseModel):
    relevant_ids: list[str]


class ExportPairsRequest(BaseModel):
    out: str | None = None  # server-side CSV path; response carries the records either way


class ExportClassesRequest(BaseModel):
    min_size: int = 10
    val_fraction: float = Field(default=0.2, ge=0.0, lt=1.0)
    seed: int = 0
    out: str | None = None


def _batch_payload(state: SessionState, app_state) -> list[dict]:
    out = []
    for entry in state.current_batch:
        item = state.db.item(entry.id)
        position = app_state.positions.get(entry.id)
        out.append(
            {
                "id": entry.id,
                "distance": entry.distance,
                "thumbnail": item.thumbnail,
                "position": position,
                "group_filled": entry.id in state.group_filled,
            }
        )
    return out


def _session_payload(state: SessionState, app_state) -> dict:
    return {
        "session_id": state.session_id,
        "status": state.status.value,
        "iteration": state.iteration,
        "scope": state.config.scope,
        "batch": _batch_payload(state, app_state) if state.status is SessionStatus.AWAITING_FEEDBACK else [],
        "metrics": state.metrics().to_dict(),
        "warnings": list(state.warnings),
    }


def create_app(
    dataset: Dataset,
    defaults: SessionConfig | None = None,
    store_path: str | Path | None = None,
    events_path: str | Path | None = None,
    thumbnail_root: str | Path | None = None,
    ui_root: str | Path | None = None,
) -> FastAPI:
    """Build the application around one loaded dataset."""
    defaults = defaults or SessionConfig()
    app = FastAPI(title="refine", version=__version__)
    state = app.state
    state.dataset = dataset
    state.defaults = defaults
    state.sessions: dict[str, SessionState] = {}
    state.session_groups: dict[str, bool] = {}
    state.completed: list[dict] = []
    state.counter = 0
    state.lock = threading.Lock()
    state.store_path = Path(store_path) if store_path else None
    state.events_path = Path(events_path) if events_path else None
    state.store = (
        GroupStore.load(state.store_path)
        if state.store_path and state.store_path.exists()
        else GroupStore()
    )
    # 2-D layout for thumbnail-less items: the first two principal axes
    state.positions = {}
    if dataset.features is not None and len(dataset) >= 3 and dataset.dim >= 2:
        planar = PcaReducer(n_components=2).fit_transform(dataset.features)
        state.positions = {
            item.id: [float(planar[i, 0]), float(planar[i, 1])]
            for i, item in enumerate(dataset.items)
        }

    if thumbnail_root:
        app.mount("/thumbnails", StaticFiles(directory=str(thumbnail_root)), name="thumbnails")
    if ui_root:
        app.mount("/ui", StaticFiles(directory=str(ui_root), html=True), name="ui")

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "items": len(state.dataset),
            "dim": state.dataset.dim if state.dataset.features is not None else 0,
            "groups": state.store.group_count,
        }

    @app.post("/sessions")
    def create_session(request: CreateSessionRequest) -> dict:
        if (request.query_id is None) == (request.query_vector is None):
            raise HTTPException(422, "provide exactly one of query_id or query_vector")
        cfg = SessionConfig(
            scope=request.scope if request.scope is not None else defaults.scope,
            max_iterations=(
                request.max_iterations
                if request.max_iterations is not None
                else defaults.max_iterations
            ),
            delta=defaults.delta,
            weight_mode=(
                WeightMode(request.weight_mode) if request.weight_mode else defaults.weight_mode
            ),
            grouping_enabled=(
                request.grouping if request.grouping is not None else defaults.grouping_enabled
            ),
            rng_seed=request.seed if request.seed is not None else defaults.rng_seed,
        )
        query = request.query_id if request.query_id is not None else np.asarray(request.query_vector)
        with state.lock:
            state.counter += 1
            session_id = f"s{state.counter:06d}"
            try:
                session = start_session(query, state.dataset, cfg, session_id=session_id)
            except RefineError as exc:
                raise HTTPException(422, str(exc)) from exc
            state.sessions[session_id] = session
        return _session_payload(session, state)

    def _get_session(session_id: str) -> SessionState:
        session = state.sessions.get(session_id)
        if session is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return session

    @app.get("/sessions/{session_id}/batch")
    def get_batch(session_id: str) -> dict:
        return _session_payload(_get_session(session_id), state)

    @app.post("/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, request: FeedbackRequest) -> dict:
        session = _get_session(session_id)
        with state.lock:
            try:
                submit_feedback(
                    session,
                    request.relevant_ids,
                    groups=state.store if session.config.grouping_enabled else None,
                )
            except StateError as exc:
                raise HTTPException(409, str(exc)) from exc
            except FeedbackError as exc:
                raise HTTPException(422, str(exc)) from exc
            if session.status is SessionStatus.COMPLETE:
                _finalize(session)
        return _session_payload(session, state)

    def _finalize(session: SessionState) -> None:
        """Write-through persistence once a session completes."""
        if state.events_path:
            append_events(state.events_path, session.events)
        if session.config.grouping_enabled and session.relevant:
            record_session(
                state.store, session.relevant, match_groups(state.store, session.relevant)
            )
            if state.store_path:
                state.store.save(state.store_path)
        m = session.metrics()
        state.completed.append(
            {
                "session_id": session.session_id,
                "accuracy": m.accuracy_per_iteration[-1] if m.accuracy_per_iteration else 0.0,
                "rf_iteration_number": m.rf_iteration_number,
            }
        )

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str) -> dict:
        return _get_session(session_id).metrics().to_dict()

    @app.get("/groups")
    def get_groups() -> dict:
        store = state.store
        return {
            "group_count": store.group_count,
            "grouped_items": len(store),
            "generation": store.generation,
            "size_histogram": {str(k): v for k, v in store.size_histogram().items()},
        }

    @app.get("/stats")
    def get_stats() -> dict:
        recent = state.completed[-50:]
        n = max(len(recent), 1)
        return {
            "completed_sessions": len(state.completed),
            "recent": recent,
            "recent_mean_accuracy": sum(r["accuracy"] for r in recent) / n,
            "recent_mean_rf_iteration_number": sum(
                r["rf_iteration_number"] or 0 for r in recent
            )
            / n,
        }

    @app.post("/export/pairs")
    def export_pairs_endpoint(request: ExportPairsRequest) -> dict:
        events = []
        if state.events_path and state.events_path.exists():
            events = load_events(state.events_path)
        for session in state.sessions.values():
            # complete sessions were already written through to the log
            if not (state.events_path and session.status is SessionStatus.COMPLETE):
                events.extend(session.events)
        records = export_pairs(events)
        if request.out:
            write_pairs_csv(records, request.out, thumbnails=_thumbnail_map())
        return {
            "count": len(records),
            "pairs": [
                {
                    "id_a": r.id_a,
                    "id_b": r.id_b,
                    "label": r.label,
                    "flagged": r.flagged,
                }
                for r in records
            ],
        }

    def _thumbnail_map() -> dict[str, str | None]:
        return {item.id: item.thumbnail for item in state.dataset.items}

    @app.post("/export/classes")
    def export_classes_endpoint(request: ExportClassesRequest) -> dict:
        try:
            manifest = export_class_dataset(
                state.store,
                min_size=request.min_size,
                val_fraction=request.val_fraction,
                seed=request.seed,
            )
        except ExportError as exc:
            raise HTTPException(422, str(exc)) from exc
        if request.out:
            write_class_manifest(manifest, request.out)
        return manifest.to_dict()

    return app


def serve(
    dataset: Dataset,
    defaults: SessionConfig | None = None,
    host: str = "127.0.0.1",
    port: int = 8000,
    **app_kwargs: Any,
) -> None:
    """Run the API with uvicorn (blocking)."""
    import uvicorn

    app = create_app(dataset, defaults, **app_kwargs)
    uvicorn.run(app, host=host, port=port)
