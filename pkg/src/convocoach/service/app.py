"""HTTP/WebSocket transport: REST for lifecycle, one live stream per session.

The stream replays the full event log on connect (resume semantics), then
pushes live events. Client frames carry ChatEvent payloads; ``resume`` and
``heartbeat`` are transport-level control frames, never persisted.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import logging

from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .. import content
from ..engine import InvalidProfile, PhaseName, ScheduleConfig
from ..gateway import Gateway, ProviderConfig, ProviderId, StubScript
from ..orchestrator import GenerationFailed, Orchestrator, ValidationFailed
from . import codec
from .config import ServiceConfig
from .sessions import SessionService
from .store import FileStore, StaleEvent, StorageUnavailable, UnknownSession
from .transcript import render_markdown, transcript_to_bytes

logger = logging.getLogger("convocoach.service")

CLOSE_UNKNOWN_SESSION = 4404
CLOSE_CONCURRENT = 4409
CLOSE_IDLE = 4408
VERIFIER_INTERVAL_SECONDS = 30.0


def build_gateway(config: ServiceConfig) -> Gateway:
    terms = content.load_banned_terms(config.banned_terms_path)
    providers = {}
    if config.primary_base_url:
        providers[ProviderId.PRIMARY_MODEL] = ProviderConfig(
            base_url=config.primary_base_url,
            model=config.primary_model,
            api_key=config.primary_api_key,
        )
    if config.emoji_base_url:
        providers[ProviderId.EMOJI_MODEL] = ProviderConfig(
            base_url=config.emoji_base_url,
            model=config.emoji_model,
            api_key=config.emoji_api_key,
        )
    script = StubScript.from_file(config.stub_script_path) if config.stub_script_path else None
    return Gateway(
        providers=providers,
        stub_script=script,
        stub_mode=config.stub_mode,
        lint_hook=lambda text: content.lint_prompt(text, terms).violations,
    )


def build_service(config: ServiceConfig) -> SessionService:
    gateway = build_gateway(config)
    model_ids = {
        "primary": config.primary_model or "stub",
        "emoji": config.emoji_model or "stub",
    }
    return SessionService(
        store=FileStore(config.storage_path),
        orchestrator=Orchestrator(gateway),
        schedule_config=ScheduleConfig(
            free_turns=config.free_turns, rounds_per_kind=config.rounds_per_kind
        ),
        seed_override=config.seed_override,
        model_ids=model_ids,
    )


class RegistrationRequest(BaseModel):
    first_name: str
    pronouns: str = ""
    topic: str
    seed: int | None = None


async def _verifier_loop(app: FastAPI) -> None:
    """Background event-sourcing audit: fold(log) must equal each snapshot."""
    while True:
        await asyncio.sleep(VERIFIER_INTERVAL_SECONDS)
        svc: SessionService = app.state.service
        try:
            session_ids = await asyncio.to_thread(svc.store.list_sessions)
            for session_id in session_ids:
                ok = await asyncio.to_thread(_locked, svc, session_id, svc.verify)
                if not ok:
                    logger.error("event log and snapshot disagree for session %s", session_id)
        except Exception:  # audit must never take the service down
            logger.exception("background verifier pass failed")


def build_app(config: ServiceConfig | None = None, service: SessionService | None = None) -> FastAPI:
    config = config or ServiceConfig()

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(_verifier_loop(app))
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(title="convocoach", version="0.1.0", lifespan=lifespan)
    app.state.config = config
    app.state.service = service or build_service(config)
    app.state.active_streams: set[str] = set()

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.get("/readyz")
    async def readyz():
        try:
            app.state.service.store.list_sessions()
        except StorageUnavailable as exc:
            return JSONResponse({"status": "unavailable", "detail": str(exc)}, status_code=503)
        return {"status": "ready"}

    @app.post("/sessions", status_code=201)
    async def create_session(body: RegistrationRequest):
        svc: SessionService = app.state.service
        try:
            return await asyncio.to_thread(
                svc.create_session, body.first_name, body.pronouns, body.topic, body.seed
            )
        except InvalidProfile as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except (GenerationFailed, ValidationFailed) as exc:
            raise HTTPException(
                status_code=502, detail={"message": str(exc), "retryable": True}
            )

    @app.get("/sessions/{session_id}")
    async def session_summary(session_id: str):
        try:
            return await asyncio.to_thread(app.state.service.summary, session_id)
        except UnknownSession:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")

    @app.get("/sessions/{session_id}/transcript")
    async def session_transcript(
        session_id: str,
        format: str = Query("json", pattern="^(json|markdown)$"),
        redact_name: bool = False,
    ):
        try:
            doc = await asyncio.to_thread(
                app.state.service.get_transcript, session_id, redact_name
            )
        except UnknownSession:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        if format == "markdown":
            return Response(render_markdown(doc), media_type="text/markdown; charset=utf-8")
        return Response(transcript_to_bytes(doc), media_type="application/json")

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        await websocket.accept()
        svc: SessionService = app.state.service
        if not svc.store.exists(session_id):
            await websocket.send_json(
                {"type": "error_notice", "code": "UnknownSession", "message": session_id}
            )
            await websocket.close(code=CLOSE_UNKNOWN_SESSION)
            return
        if session_id in app.state.active_streams:
            await websocket.send_json(
                {
                    "type": "error_notice",
                    "code": "ConcurrentConnection",
                    "message": "another stream is already open for this session",
                }
            )
            await websocket.close(code=CLOSE_CONCURRENT)
            return
        app.state.active_streams.add(session_id)
        try:
            await _serve_stream(app, websocket, svc, session_id)
        except WebSocketDisconnect:
            pass
        finally:
            app.state.active_streams.discard(session_id)

    return app


def _locked(svc: SessionService, session_id: str, fn, *args):
    with svc.lock(session_id):
        return fn(session_id, *args)


async def _send_events(websocket: WebSocket, events: list[dict]) -> bool:
    """Send events (redacted); returns True when the session just completed."""
    completed = False
    for event in events:
        await websocket.send_json(codec.redact_for_wire(event))
        if event["payload"].get("type") == "session_completed":
            completed = True
    return completed


async def _serve_stream(app: FastAPI, websocket: WebSocket, svc: SessionService, session_id: str):
    config: ServiceConfig = app.state.config
    loop = asyncio.get_running_loop()

    for event in await asyncio.to_thread(svc.replay_events, session_id):
        await websocket.send_json(codec.redact_for_wire(event))

    state = await asyncio.to_thread(svc.load_state, session_id)
    if state.phase.name is PhaseName.COMPLETED:
        await websocket.close(code=1000, reason="session completed")
        return

    events = await asyncio.to_thread(_locked, svc, session_id, svc.ensure_chat_started)
    events += await asyncio.to_thread(_locked, svc, session_id, svc.resume_pending)
    await _send_events(websocket, events)

    idle_deadline = loop.time() + config.idle_timeout_seconds
    while True:
        try:
            raw = await asyncio.wait_for(
                websocket.receive_text(), timeout=config.heartbeat_seconds
            )
        except asyncio.TimeoutError:
            if loop.time() >= idle_deadline:
                await websocket.close(code=CLOSE_IDLE, reason="idle timeout")
                return
            await websocket.send_json({"type": "heartbeat"})
            continue
        idle_deadline = loop.time() + config.idle_timeout_seconds
        try:
            payload = json.loads(raw)
            assert isinstance(payload, dict)
        except (json.JSONDecodeError, AssertionError):
            await websocket.send_json(
                {"type": "error_notice", "code": "BadFrame", "message": "frames must be JSON objects"}
            )
            continue
        if payload.get("type") == "resume":
            events = await asyncio.to_thread(_locked, svc, session_id, svc.resume_pending)
        else:
            try:
                events = await asyncio.to_thread(
                    _locked, svc, session_id, svc.handle_client_payload, payload
                )
            except StaleEvent as exc:
                await websocket.send_json(
                    {"type": "error_notice", "code": "StaleEvent", "message": str(exc)}
                )
                continue
        if await _send_events(websocket, events):
            await websocket.close(code=1000, reason="session completed")
            return


def main():  # pragma: no cover - thin launcher
    import argparse

    import uvicorn

    from .config import load_config

    parser = argparse.ArgumentParser(description="Run the chat simulation service")
    parser.add_argument("--config", default=None, help="YAML config path")
    args = parser.parse_args()
    config = load_config(args.config)
    uvicorn.run(build_app(config), host=config.host, port=config.port)


if __name__ == "__main__":  # pragma: no cover
    main()
