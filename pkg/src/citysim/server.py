"""HTTP/JSON service over the engine.

Wire contract: every response is either a documented success schema or a
flat error body {"code", "message"}. Pull endpoints are read-only and echo
the snapshot step. Event push is newline-delimited JSON over a held
streaming response, with ?since_seq= long-poll fallback.
"""

from __future__ import annotations

import json
import os
import threading
import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .errors import (
    INVALID_TRIPS,
    PARSE_ERROR,
    STALE_STEP,
    UNKNOWN_CLIENT,
    UNKNOWN_ENTITY,
    UNKNOWN_ID,
    UNKNOWN_PERSON,
    UNKNOWN_RELATION,
    UNKNOWN_SUBSCRIPTION,
    SimError,
)
from .kernel import Engine
from .kg import KnowledgeGraph, entity_str, parse_entity
from .model import Trip
from .nl import handle_text

_STATUS = {
    UNKNOWN_ID: 404,
    UNKNOWN_PERSON: 404,
    UNKNOWN_CLIENT: 404,
    UNKNOWN_SUBSCRIPTION: 404,
    UNKNOWN_ENTITY: 404,
    UNKNOWN_RELATION: 404,
    STALE_STEP: 409,
}


def _error(exc: SimError) -> JSONResponse:
    return JSONResponse(
        status_code=_STATUS.get(exc.code, 400),
        content={"code": exc.code, "message": exc.message},
    )


def _normalize_depart(value, now: int) -> int:
    """Accept integer seconds or an "HH:MM" string mapped into the current
    simulated day."""
    if isinstance(value, bool):
        raise SimError(INVALID_TRIPS, "depart must be seconds or HH:MM")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        text = value.strip()
        if ":" in text:
            hh, _, mm = text.partition(":")
            if hh.isdigit() and mm.isdigit() and int(hh) < 24 and int(mm) < 60:
                return (now // 86400) * 86400 + int(hh) * 3600 + int(mm) * 60
        if text.isdigit():
            return int(text)
    raise SimError(INVALID_TRIPS, f"bad depart value {value!r}")


def _parse_trips(body: dict, now: int) -> list[Trip]:
    raw = body.get("trips")
    if not isinstance(raw, list):
        raise SimError(INVALID_TRIPS, "body must be {'trips': [...]}")
    trips = []
    for i, obj in enumerate(raw):
        if not isinstance(obj, dict):
            raise SimError(INVALID_TRIPS, f"trip {i} must be an object")
        end = obj.get("end")
        if not isinstance(end, dict) or len(end) != 1:
            raise SimError(INVALID_TRIPS, f"trip {i}: end must be {{'aoi': id}} or {{'poi': id}}")
        kind, ident = next(iter(end.items()))
        if kind not in ("aoi", "poi"):
            raise SimError(INVALID_TRIPS, f"trip {i}: unknown destination kind {kind!r}")
        depart = obj.get("depart", obj.get("depart_time"))
        if depart is None:
            raise SimError(INVALID_TRIPS, f"trip {i}: missing depart")
        trips.append(
            Trip(
                end=(kind, int(ident)),
                depart_time=_normalize_depart(depart, now),
                mode=obj.get("mode", "walk"),
            )
        )
    return trips


async def _body_json(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception as exc:
        raise SimError(PARSE_ERROR, f"bad JSON body: {exc}") from exc
    if not isinstance(body, dict):
        raise SimError(PARSE_ERROR, "body must be a JSON object")
    return body


def create_app(engine: Engine, kg: KnowledgeGraph | None = None) -> FastAPI:
    app = FastAPI(title="citysim", docs_url=None, redoc_url=None)
    app.state.engine = engine
    app.state.kg = kg

    @app.exception_handler(SimError)
    async def _sim_error(_request, exc: SimError):
        return _error(exc)

    @app.get("/clock")
    def clock():
        return engine.clock()

    @app.get("/aois/{aoi_id}")
    def get_aoi(aoi_id: int):
        return engine.get_aoi_runtime(aoi_id)

    @app.get("/roads/{road_id}")
    def get_road(road_id: int):
        return engine.get_road_runtime(road_id)

    @app.get("/persons/{person_id}")
    def get_person(person_id: int):
        return engine.get_person_runtime(person_id)

    @app.post("/persons/{person_id}/trips")
    async def set_trips(person_id: int, request: Request):
        body = await _body_json(request)
        now = engine.cfg.start_time + engine.clock()["step"]
        engine.submit_control(person_id, _parse_trips(body, now))
        return {"status": "ok"}

    @app.post("/clients")
    async def register_client(request: Request):
        body = await _body_json(request)
        name = str(body.get("name", "client"))
        timeout = float(body.get("timeout_s", 30.0))
        return {"client_id": engine.register_client(name, timeout)}

    @app.post("/clients/{client_id}/ack")
    async def ack(client_id: int, request: Request):
        body = await _body_json(request)
        if "step" not in body:
            raise SimError(PARSE_ERROR, "body must include step")
        count = int(body.get("count", 1))
        return engine.ack(client_id, int(body["step"]), count)

    @app.post("/subscriptions")
    async def subscribe(request: Request):
        body = await _body_json(request)
        if "trigger" not in body or "target_id" not in body:
            raise SimError(PARSE_ERROR, "body must include trigger and target_id")
        return {"sub_id": engine.subscribe(str(body["trigger"]), int(body["target_id"]))}

    @app.get("/subscriptions/{sub_id}/events")
    def poll_events(sub_id: int, since_seq: int | None = None):
        events, truncated = engine.drain_events(sub_id, since_seq)
        return {
            "events": [ev.to_json() for ev in events],
            "truncated": truncated,
            "step": engine.clock()["step"],
        }

    @app.get("/subscriptions/{sub_id}/stream")
    def stream_events(sub_id: int, since_seq: int | None = None):
        # Validate eagerly so a bad id fails with 404, not mid-stream.
        engine.drain_events(sub_id, since_seq if since_seq is not None else -1)
        cursor = since_seq

        def generate():
            nonlocal cursor
            while True:
                try:
                    events, _ = engine.drain_events(sub_id, cursor)
                except SimError:
                    return
                for ev in events:
                    yield json.dumps(ev.to_json(), separators=(",", ":")) + "\n"
                if events:
                    cursor = events[-1].seq
                elif cursor is None:
                    cursor = -1
                time.sleep(0.05)

        return StreamingResponse(generate(), media_type="application/x-ndjson")

    @app.get("/kg/{entity_kind}/{entity_id}/{relation}")
    def kg_query(entity_kind: str, entity_id: str, relation: str):
        if app.state.kg is None:
            raise SimError(UNKNOWN_ENTITY, "knowledge graph not built for this map")
        entity = parse_entity(entity_kind, entity_id)
        results = app.state.kg.query(entity, relation)
        return {"entities": [entity_str(e) for e in results]}

    @app.post("/nl")
    async def nl(request: Request):
        body = await _body_json(request)
        if "text" not in body:
            raise SimError(PARSE_ERROR, "body must include text")
        return {"text": handle_text(str(body["text"]), engine)}

    return app


def serve(
    engine: Engine,
    kg: KnowledgeGraph | None = None,
    port: int = 8000,
    host: str = "127.0.0.1",
    free_run_rate: float | None = None,
):
    """Run the service until interrupted. UGI_PORT overrides the port."""
    import uvicorn

    port = int(os.environ.get("UGI_PORT", port))
    app = create_app(engine, kg)
    _start_background(engine, free_run_rate)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def _start_background(engine: Engine, free_run_rate: float | None) -> list[threading.Thread]:
    threads = []

    def sweeper():
        while True:
            time.sleep(0.25)
            engine.check_timeouts()

    t = threading.Thread(target=sweeper, daemon=True, name="barrier-sweeper")
    t.start()
    threads.append(t)

    if free_run_rate:
        interval = 1.0 / free_run_rate

        def pacer():
            while True:
                t0 = time.perf_counter()
                engine.force_advance(1)
                elapsed = time.perf_counter() - t0
                if interval > elapsed:
                    time.sleep(interval - elapsed)

        t = threading.Thread(target=pacer, daemon=True, name="free-run")
        t.start()
        threads.append(t)
    return threads
