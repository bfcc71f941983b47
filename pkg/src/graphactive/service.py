"""HTTP wire API over live labelling sessions.

Endpoints (JSON):

* ``POST /sessions`` ``{dataset, strategy, seed, config}`` →
  ``{id, query, context, revision, ...}``
* ``GET /sessions/{id}`` → state snapshot (never blocks on computation)
* ``POST /sessions/{id}/label`` ``{node, class}`` →
  ``{status: "next" | "pending", query?, context?, revision}``
* ``GET /sessions/{id}/metrics`` → timings, accuracy curve, bounds
* ``DELETE /sessions/{id}``
* ``GET /datasets`` → registered dataset descriptors

Every session-scoped response carries the session's monotonically
increasing ``revision`` for client cache coherence.  Run with::

    uvicorn --factory graphactive.service:create_app
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, ConfigDict, Field

from .data import DatasetError, load_dataset
from .sessions import SessionConfig, SessionError, SessionRegistry

__all__ = ["create_app", "default_registry"]


class CreateSessionRequest(BaseModel):
    dataset: str
    strategy: str = "pregeem"
    seed: int = 0
    config: dict = Field(default_factory=dict)


class LabelRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    node: int
    label: int = Field(alias="class")


def default_registry(data_dirs=("data",), log_dir=None) -> SessionRegistry:
    """Registry with every dataset container found in ``data_dirs``."""
    registry = SessionRegistry(log_dir=log_dir)
    for directory in data_dirs:
        directory = Path(directory)
        if not directory.is_dir():
            continue
        for path in sorted(directory.glob("*.json")):
            try:
                graph, features = load_dataset(path)
            except DatasetError:
                continue
            registry.register_dataset(graph.name, graph, features, truth=graph.labels)
    return registry


def create_app(registry: SessionRegistry | None = None) -> FastAPI:
    if registry is None:
        registry = default_registry()
    app = FastAPI(title="graphactive sessions")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.registry = registry

    def _session(session_id: str):
        try:
            return registry.get(session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    @app.get("/datasets")
    def list_datasets():
        return {"datasets": registry.dataset_descriptors()}

    @app.post("/sessions")
    def create_session(request: CreateSessionRequest):
        try:
            config = SessionConfig.from_dict(
                {**request.config, "strategy": request.strategy, "seed": request.seed}
            )
            session = registry.create_session(request.dataset, config)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        except SessionError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        state = session.get_state()
        return {
            "id": session.id,
            "query": state["query"],
            "context": state["context"],
            "revision": state["revision"],
            "phase": state["phase"],
            "budget": state["budget"],
            "classes": state["classes"],
            "dataset": state["dataset"],
        }

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            return _session(session_id).get_state()
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    @app.post("/sessions/{session_id}/label")
    def submit_label(session_id: str, request: LabelRequest):
        session = _session(session_id)
        if not 0 <= request.label < session.state.n_classes:
            raise HTTPException(
                status_code=422, detail=f"class {request.label} out of range"
            )
        try:
            return session.submit_label(request.node, request.label)
        except SessionError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        try:
            return _session(session_id).get_metrics()
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        try:
            registry.destroy(session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        return {"deleted": session_id}

    return app
