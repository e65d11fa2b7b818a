"""HTTP + server-sent-events facade over the session manager.

Every route delegates to SessionManager and returns plain JSON documents.
Domain errors carry their own HTTP status, so the handlers stay free of
status-code logic. The event stream replays a backlog first, then pushes
live events in seq order, with comment keepalives while idle.
"""
from __future__ import annotations

import json
import logging
import queue
from pathlib import Path
from typing import Any, Iterator

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .errors import LitsteerError
from .events import Event
from .session import (
    SessionManager,
    node_view,
    paper_view,
    pipeline_view,
    projection_view,
    session_view,
    tree_view,
)

logger = logging.getLogger(__name__)

DEFAULT_KEEPALIVE_SECONDS = 15.0


class PipelineBody(BaseModel):
    query_text: str
    auto_approve: bool | dict[str, bool] | None = None
    run_to_next_checkpoint: bool = False
    parent_node_id: str | None = None


class NodeActionBody(BaseModel):
    pipeline_id: str | None = None


class EditBody(BaseModel):
    payload: dict[str, Any]


class ProposeBody(BaseModel):
    n: int | None = None


class MaterializeBody(BaseModel):
    auto_approve: bool | dict[str, bool] | None = None
    run_to_next_checkpoint: bool = False


class PaperStateBody(BaseModel):
    state: str
    session_id: str | None = None


def _sse_frame(event: Event) -> str:
    doc = {"seq": event.seq, "kind": event.kind, "payload": event.payload}
    return f"id: {event.seq}\ndata: {json.dumps(doc, ensure_ascii=False)}\n\n"


def _event_stream(
    manager: SessionManager,
    session_id: str,
    since: int,
    keepalive_seconds: float,
    limit: int | None,
) -> Iterator[str]:
    backlog, live = manager.subscribe(session_id, since=since)
    sent = 0
    try:
        for event in backlog:
            yield _sse_frame(event)
            sent += 1
            if limit is not None and sent >= limit:
                return
        while True:
            try:
                event = live.get(timeout=keepalive_seconds)
            except queue.Empty:
                yield ": keepalive\n\n"
                continue
            yield _sse_frame(event)
            sent += 1
            if limit is not None and sent >= limit:
                return
    finally:
        manager.unsubscribe(session_id, live)


def create_app(
    manager: SessionManager,
    keepalive_seconds: float = DEFAULT_KEEPALIVE_SECONDS,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="litsteer", docs_url=None, redoc_url=None)
    app.state.manager = manager

    if ui_dir is not None:
        # Same-origin hosting of the built web client: no cross-origin
        # configuration needed for fetch or the event stream.
        from starlette.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(LitsteerError)
    async def handle_domain_error(request: Request, exc: LitsteerError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"error": exc.code, "message": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        # Malformed bodies are client errors in this API's vocabulary.
        return JSONResponse(
            status_code=400,
            content={"error": "InvalidRequest", "message": str(exc)},
        )

    # --- sessions --------------------------------------------------------------

    @app.post("/sessions")
    def create_session() -> dict[str, Any]:
        return session_view(manager.create_session())

    @app.get("/sessions/{sid}")
    def get_session(sid: str) -> dict[str, Any]:
        return session_view(manager.get_session(sid))

    @app.post("/sessions/{sid}/pipelines")
    def create_pipeline(sid: str, body: PipelineBody) -> dict[str, Any]:
        run = manager.create_pipeline(
            sid,
            query_text=body.query_text,
            auto_approve=body.auto_approve,
            run_to_next_checkpoint=body.run_to_next_checkpoint,
            parent_node_id=body.parent_node_id,
        )
        return pipeline_view(run)

    # --- pipeline control ------------------------------------------------------

    @app.post("/pipelines/{pid}/step")
    def step(pid: str) -> dict[str, Any]:
        return node_view(manager.step(pid))

    @app.post("/nodes/{nid}/approve")
    def approve(nid: str, body: NodeActionBody | None = None) -> dict[str, Any]:
        body = body or NodeActionBody()
        return pipeline_view(manager.approve(nid, pipeline_id=body.pipeline_id))

    @app.post("/nodes/{nid}/rerun")
    def rerun(nid: str, body: NodeActionBody | None = None) -> dict[str, Any]:
        body = body or NodeActionBody()
        return node_view(manager.rerun(nid, pipeline_id=body.pipeline_id))

    @app.post("/pipelines/{pid}/nodes/{nid}/edit")
    def edit(pid: str, nid: str, body: EditBody) -> dict[str, Any]:
        return pipeline_view(manager.edit_output(pid, nid, body.payload))

    @app.get("/pipelines/{pid}")
    def get_pipeline(pid: str) -> dict[str, Any]:
        _session, run = manager.get_pipeline(pid)
        return pipeline_view(run)

    @app.get("/pipelines/{pid}/nodes/{nid}")
    def inspect_node(pid: str, nid: str) -> dict[str, Any]:
        _session, run = manager.get_pipeline(pid)
        run.node(nid)
        return manager.inspect(nid)

    # --- exploration tree --------------------------------------------------------

    @app.get("/sessions/{sid}/tree")
    def get_tree(sid: str) -> dict[str, Any]:
        return tree_view(manager.get_session(sid))

    @app.post("/tree/{tree_node_id}/propose")
    def propose(tree_node_id: str, body: ProposeBody | None = None) -> dict[str, Any]:
        body = body or ProposeBody()
        nodes = manager.propose_directions(tree_node_id, count=body.n)
        return {"proposals": [node.to_dict() for node in nodes]}

    @app.post("/tree/{tree_node_id}/materialize")
    def materialize(
        tree_node_id: str, body: MaterializeBody | None = None
    ) -> dict[str, Any]:
        body = body or MaterializeBody()
        run = manager.materialize(
            tree_node_id,
            auto_approve=body.auto_approve,
            run_to_next_checkpoint=body.run_to_next_checkpoint,
        )
        return pipeline_view(run)

    # --- projection and papers --------------------------------------------------

    @app.get("/sessions/{sid}/projection")
    def get_projection(sid: str, iterations: str | None = None) -> dict[str, Any]:
        session = manager.get_session(sid)
        tags = None
        if iterations:
            tags = [t for t in iterations.split(",") if t]
        return projection_view(session, iterations=tags)

    @app.post("/sessions/{sid}/projection/refresh")
    def refresh_projection(sid: str) -> dict[str, Any]:
        manager.refresh_projection(sid)
        return projection_view(manager.get_session(sid))

    @app.get("/sessions/{sid}/papers/{arxiv_id}")
    def get_paper(sid: str, arxiv_id: str) -> dict[str, Any]:
        return paper_view(manager.get_session(sid), arxiv_id)

    @app.post("/papers/{arxiv_id}/state")
    def set_paper_state(arxiv_id: str, body: PaperStateBody) -> dict[str, Any]:
        verdict = manager.set_user_state(
            arxiv_id, body.state, session_id=body.session_id
        )
        return verdict.to_dict()

    # --- event stream --------------------------------------------------------------

    @app.get("/sessions/{sid}/events")
    def events(sid: str, since: int = 0, limit: int | None = None) -> StreamingResponse:
        # limit lets polling clients (and tests) take a bounded slice of the
        # stream instead of holding the connection open forever.
        manager.get_session(sid)
        stream = _event_stream(manager, sid, since, keepalive_seconds, limit)
        return StreamingResponse(
            stream,
            media_type="text/event-stream",
            headers={
                "Cache-Control": "no-cache",
                "X-Accel-Buffering": "no",
            },
        )

    return app
