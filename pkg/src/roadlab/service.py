"""HTTP face of the engine: feature CRUD, sessions, presence, change feed."""
from __future__ import annotations

import asyncio
import secrets
import time
from typing import Optional

from fastapi import FastAPI, Header, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .engine import Engine
from .errors import (
    AmbiguousEdit,
    Conflict,
    ConcurrentModification,
    CyclicTriggerError,
    InvalidGeometry,
    Misconfigured,
    NotFound,
    NotOnRoad,
    OutOfRange,
    ParseError,
    RoadlabError,
    SchemaViolation,
    Unsupported,
)
from .store import (
    ChangeRecord,
    Feature,
    feature_to_geojson,
    geometry_from_geojson,
)

_STATUS = {
    NotFound: 404,
    Conflict: 409,
    ConcurrentModification: 409,
    CyclicTriggerError: 500,
}
_BAD_REQUEST = (AmbiguousEdit, OutOfRange, SchemaViolation, Unsupported,
                Misconfigured, NotOnRoad, InvalidGeometry, ParseError)


def _error_response(exc: RoadlabError, layer: Optional[str] = None,
                    feature: Optional[int] = None) -> JSONResponse:
    status = _STATUS.get(type(exc), 400 if isinstance(exc, _BAD_REQUEST) else 500)
    body = {"code": type(exc).__name__, "message": str(exc)}
    if layer is not None:
        body["layer"] = layer
    if feature is not None:
        body["feature"] = feature
    return JSONResponse(body, status_code=status)


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="roadlab")
    app.state.engine = engine
    app.state.sessions = {}  # token -> user id

    def origin_of(session: Optional[str]) -> str:
        if session and session in app.state.sessions:
            return app.state.sessions[session]
        return "anonymous"

    @app.exception_handler(RoadlabError)
    async def roadlab_error(request: Request, exc: RoadlabError):
        layer = request.path_params.get("name")
        fid = request.path_params.get("fid")
        return _error_response(exc, layer, int(fid) if fid is not None else None)

    # ------------------------------------------------------------ layers

    @app.get("/layers")
    def list_layers():
        return {"layers": engine.store.layer_names()}

    @app.get("/layers/{name}/features")
    def list_features(name: str, bbox: Optional[str] = None):
        box = None
        if bbox:
            parts = [float(v) for v in bbox.split(",")]
            if len(parts) != 4:
                raise ParseError("bbox must be x1,y1,x2,y2")
            box = tuple(parts)
        feats = engine.store.query(name, bbox=box)
        return {"type": "FeatureCollection",
                "features": [feature_to_geojson(f) for f in feats]}

    @app.post("/layers/{name}/features", status_code=201)
    def create_feature(name: str, body: dict,
                       x_session: Optional[str] = Header(default=None)):
        geometry = geometry_from_geojson(body.get("geometry"))
        attrs = body.get("properties") or {}
        feat = engine.insert_feature(name, geometry, attrs, origin_of(x_session))
        return feature_to_geojson(feat)

    @app.put("/layers/{name}/features/{fid}")
    def update_feature(name: str, fid: int, body: dict,
                       x_session: Optional[str] = Header(default=None)):
        geometry = geometry_from_geojson(body.get("geometry"))
        attrs = body.get("properties") or {}
        feat = engine.update_feature(name, fid, geometry, attrs, origin_of(x_session))
        return feature_to_geojson(feat)

    @app.delete("/layers/{name}/features/{fid}", status_code=204)
    def delete_feature(name: str, fid: int,
                       x_session: Optional[str] = Header(default=None)):
        engine.delete_feature(name, fid, origin_of(x_session))

    # ---------------------------------------------------------- sessions

    @app.post("/sessions", status_code=201)
    def create_session(body: dict, request: Request):
        user = body.get("user_id")
        if not user:
            raise ParseError("user_id is required")
        host = request.client.host if request.client else "local"
        token = secrets.token_hex(16)
        app.state.sessions[token] = f"{user}@{host}"
        return {"session": token, "user_id": app.state.sessions[token],
                "created": int(time.time() * 1000)}

    @app.post("/extents")
    def post_extent(body: dict, x_session: Optional[str] = Header(default=None)):
        rect = body.get("rect")
        if not (isinstance(rect, list) and len(rect) == 4):
            raise ParseError("rect must be [x_min, y_min, x_max, y_max]")
        t_ms = body.get("t", int(time.time() * 1000))
        recorded = engine.record_extent(origin_of(x_session), tuple(rect),
                                        int(t_ms), float(body.get("scale", 1.0)))
        return {"recorded": recorded}

    @app.get("/conflicts")
    def conflicts():
        engine.drain_extents()
        return {"conflicts": [f.attributes for f in engine.store.features("conflicts")]}

    # -------------------------------------------------------------- feed

    @app.get("/changes")
    def changes(since: int = 0):
        events = [r.to_event() for r in engine.store.events_since(since)]
        last = events[-1]["seq"] if events else since
        return {"events": events, "last_seq": last}

    @app.websocket("/feed")
    async def feed(ws: WebSocket, since: int = 0):
        await ws.accept()
        seq = since
        try:
            while True:
                records = await asyncio.to_thread(
                    engine.store.wait_for_events, seq, 0.5)
                for rec in records:
                    await ws.send_json(rec.to_event())
                    seq = rec.seq
        except WebSocketDisconnect:
            pass

    return app
