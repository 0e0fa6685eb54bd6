"""HTTP + WebSocket service boundary between the engine and the dashboard.

Routes:
    POST /sessions                  create a session
    GET  /sessions                  list sessions
    POST /sessions/{id}/start       launch the pipeline
    POST /sessions/{id}/stop        drain and finalize
    GET  /sessions/{id}/stats       latest stats snapshot
    WS   /sessions/{id}/events      event stream, resumable via ?from=<event_id>
"""

from __future__ import annotations

import anyio
from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field

from .audio import StreamSource
from .backends import BackendSet
from .config import EngineConfig
from .errors import IllegalTransition, InvalidConfig, UnknownSession
from .session import SessionManager


class CreateSessionRequest(BaseModel):
    kind: str = Field(description="hls_playlist or local_file")
    locator: str
    language: str = "en"
    config: dict = Field(default_factory=dict)
    fixture: str | None = Field(default=None, description="mock fixture path overriding default backends")


def create_app(manager: SessionManager | None = None,
               default_backends: BackendSet | None = None) -> FastAPI:
    manager = manager or SessionManager(default_backends=default_backends)
    app = FastAPI(title="livecheck", version="0.1.0")
    app.state.manager = manager

    def _get(session_id: str):
        try:
            return manager.get(session_id)
        except UnknownSession:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        try:
            source = StreamSource(kind=req.kind, locator=req.locator, declared_language=req.language)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        backends = None
        if req.fixture:
            from .backends.mock import load_backends

            backends = load_backends(req.fixture)
        try:
            config = EngineConfig().replace(**req.config) if req.config else EngineConfig()
            session_id = manager.create_session(source, config=config, backends=backends)
        except (InvalidConfig, TypeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"session_id": session_id, "state": manager.get(session_id).state}

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": manager.list_sessions()}

    @app.post("/sessions/{session_id}/start")
    def start_session(session_id: str):
        session = _get(session_id)
        try:
            state = session.start()
        except IllegalTransition as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"session_id": session_id, "state": state}

    @app.post("/sessions/{session_id}/stop")
    def stop_session(session_id: str):
        session = _get(session_id)
        try:
            state = session.stop()
        except IllegalTransition as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"session_id": session_id, "state": state}

    @app.get("/sessions/{session_id}/stats")
    def session_stats(session_id: str):
        session = _get(session_id)
        return {"session_id": session_id, "state": session.state, "stats": session.stats.snapshot()}

    @app.websocket("/sessions/{session_id}/events")
    async def events(
        websocket: WebSocket,
        session_id: str,
        from_event_id: int = Query(0, alias="from"),
    ):
        try:
            session = manager.get(session_id)
        except UnknownSession:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        subscription = session.log.subscribe(from_event_id)
        try:
            while True:
                event = await anyio.to_thread.run_sync(lambda: subscription.get(timeout=0.5))
                if event is not None:
                    await websocket.send_text(event.to_json())
                elif subscription.dropped or (session.wait(timeout=0) and subscription.drained()):
                    break
        except WebSocketDisconnect:
            pass
        finally:
            subscription.close()
            try:
                await websocket.close()
            except RuntimeError:
                pass

    return app
