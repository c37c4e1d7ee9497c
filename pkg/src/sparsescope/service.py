"""HTTP/JSON session service.

Thin FastAPI wiring over Session: every route body delegates to the
session object and maps the library's error taxonomy onto status codes
(404 unknown session, 400 bad input, 409 busy, 422 pipeline failure
with the failing stage named).  Responses are plain dicts built in a
fixed key order, so replaying a scripted session against a fresh
process yields byte-identical bodies.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .errors import BusyError, DataError, StageFailure, UsageError
from .session import Session, SessionConfig, parse_filter
from .table import load_csv

ENV_CONFIG = "SPARSESCOPE_CONFIG"
DEFAULT_PORT = 8000

_INT_KEYS = {"helpers", "neighbors", "stages", "tsne_iters", "min_pts", "bins", "sample_target", "seed"}
_FLOAT_KEYS = {"col_threshold", "row_threshold", "perplexity", "eps", "glyph_radius", "buffer_radius"}


def load_config(path) -> dict:
    """Parse a key=value config file; '#' starts a comment, blanks skipped."""
    out: dict = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _coerce(key: str, value):
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key == "targets":
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        return tuple(str(v) for v in value)
    raise UsageError(f"unknown config key {key!r}")


def build_session_config(*layers) -> SessionConfig:
    """Fold config-file and request-body overrides into a SessionConfig.

    Later layers win.  Keys outside the session's parameter set (port,
    dataset) are ignored here; they belong to the server, not a session.
    """
    merged: dict = {}
    for layer in layers:
        if not layer:
            continue
        for key, value in layer.items():
            if key in ("port", "dataset"):
                continue
            merged[key] = _coerce(key, value)
    return SessionConfig(**merged)


def create_app(config_path=None) -> FastAPI:
    """Build the service; SPARSESCOPE_CONFIG overrides the given path."""
    env_path = os.environ.get(ENV_CONFIG)
    if env_path:
        config_path = env_path
    config = load_config(config_path) if config_path else {}

    app = FastAPI(title="sparsescope", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.sessions = {}
    app.state.created = 0

    @app.exception_handler(RequestValidationError)
    async def _bad_body(request: Request, exc: RequestValidationError):
        # malformed request bodies are caller errors, not pipeline failures
        return JSONResponse(status_code=400, content={"detail": "malformed request body"})

    def sessions() -> dict:
        return app.state.sessions

    def get_session(session_id: str) -> Session:
        try:
            return sessions()[session_id]
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}") from None

    def run(fn):
        """Translate library failures into transport codes."""
        try:
            return fn()
        except StageFailure as e:
            raise HTTPException(
                status_code=422, detail={"stage": e.stage, "error": str(e.cause)}
            ) from e
        except BusyError as e:
            raise HTTPException(status_code=409, detail=str(e)) from e
        except (UsageError, DataError, KeyError) as e:
            raise HTTPException(status_code=400, detail=str(e)) from e

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session(body: dict = Body(default={})):
        def build():
            dataset = body.get("dataset") or config.get("dataset")
            if not dataset:
                raise UsageError("no dataset: pass 'dataset' or set it in the config")
            overrides = dict(body.get("params") or {})
            if "seed" in body:
                overrides["seed"] = body["seed"]
            cfg = build_session_config(config, overrides)
            try:
                raw = load_csv(Path(dataset).read_text(encoding="utf-8"))
            except OSError as e:
                raise UsageError(f"cannot read dataset {dataset!r}: {e}") from e
            ordinal = app.state.created
            sid = hashlib.sha1(f"{dataset}|{cfg.seed}|{ordinal}".encode()).hexdigest()[:12]
            session = Session(sid, raw, cfg)
            sessions()[sid] = session
            app.state.created = ordinal + 1
            return {
                "sessionId": sid,
                "retainedCount": len(session.retained()),
                "attributes": list(session.table.names),
                "targets": list(session.targets),
                "keyAttributes": list(session.key_attrs),
                "clusters": session.labels.n_clusters,
                "embedding": {
                    rid: [float(x), float(y)] for rid, (x, y) in session.embedding.items()
                },
            }

        return run(build)

    @app.post("/sessions/{session_id}/filter")
    def post_filter(session_id: str, body: dict = Body(...)):
        session = get_session(session_id)
        return run(lambda: session.apply(parse_filter(body)))

    @app.post("/sessions/{session_id}/key-attributes")
    def post_key_attributes(session_id: str, body: dict = Body(...)):
        session = get_session(session_id)

        def set_attrs():
            attrs = body.get("attrs")
            if not isinstance(attrs, (list, tuple)):
                raise UsageError("body must carry 'attrs': [names]")
            session.set_key_attributes([str(a) for a in attrs])
            return {
                "keyAttributes": list(session.key_attrs),
                "clusters": session.labels.n_clusters,
            }

        return run(set_attrs)

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str):
        session = get_session(session_id)
        return run(session.history_payload)

    @app.get("/sessions/{session_id}/distribution")
    def get_distribution(session_id: str):
        session = get_session(session_id)
        return run(session.distribution_payload)

    @app.get("/sessions/{session_id}/discovery")
    def get_discovery(session_id: str):
        session = get_session(session_id)
        return run(session.discovery_payload)

    @app.get("/sessions/{session_id}/comparison")
    def get_comparison(session_id: str, ids: str = ""):
        session = get_session(session_id)
        wanted = [i for i in ids.split(",") if i]
        return run(lambda: session.comparison_payload(wanted))

    return app


def serve(config_path=None, port=None) -> None:
    """Blocking entry point used by the CLI's serve subcommand."""
    import uvicorn

    app = create_app(config_path)
    if port is None:
        port = int(app.state.config.get("port", DEFAULT_PORT))
    uvicorn.run(app, host="127.0.0.1", port=port)
