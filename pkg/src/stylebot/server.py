"""HTTP service exposing the chat pipeline.

Endpoints: POST /api/chat, GET /api/trace/{turn_id}, GET /api/health, and
GET / serving the built UI's static assets. The engine loads in a background
thread; chat and trace answer 503 until it is ready. Traces for the last
1000 turns are kept in an internally locked ring buffer.
"""

from __future__ import annotations

import json
import os
import threading
import time
from collections import OrderedDict
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .pipeline import Engine, load_engine, respond
from .textproc import tokenize

TRACE_RING_SIZE = 1000

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>stylebot</title></head>
<body><h1>stylebot</h1>
<p>The chat UI has not been built. POST to <code>/api/chat</code> directly:</p>
<pre>curl -s -X POST localhost:8000/api/chat -H 'content-type: application/json' \\
  -d '{"session_id": "s1", "utterance": "engage"}'</pre>
</body></html>"""


class TraceStore:
    """Bounded ring of recent traces; the only mutable shared state."""

    def __init__(self, capacity: int = TRACE_RING_SIZE):
        self.capacity = capacity
        self._lock = threading.Lock()
        self._traces: OrderedDict[str, dict] = OrderedDict()

    def put(self, turn_id: str, trace: dict) -> None:
        with self._lock:
            self._traces[turn_id] = trace
            while len(self._traces) > self.capacity:
                self._traces.popitem(last=False)

    def get(self, turn_id: str) -> dict | None:
        with self._lock:
            return self._traces.get(turn_id)


def _ui_dir() -> Path | None:
    env = os.environ.get("STYLEBOT_UI_DIR")
    if env:
        p = Path(env)
        return p if p.is_dir() else None
    p = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return p if p.is_dir() else None


def create_app(manifest_path: str | Path | None = None, engine: Engine | None = None) -> FastAPI:
    """Build the service. Pass a ready engine (tests) or a manifest path to
    load in the background. STYLEBOT_LOAD_DELAY=<seconds> delays the load,
    which makes the 503 window reproducible."""
    state: dict = {"engine": engine, "error": None}
    traces = TraceStore()
    counter_lock = threading.Lock()
    counter = {"n": 0}

    def _load() -> None:
        delay = float(os.environ.get("STYLEBOT_LOAD_DELAY", "0") or 0)
        if delay:
            time.sleep(delay)
        try:
            state["engine"] = load_engine(manifest_path)
        except Exception as exc:  # surfaces in /api/health
            state["error"] = str(exc)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        if state["engine"] is None and manifest_path is not None:
            threading.Thread(target=_load, daemon=True).start()
        yield

    app = FastAPI(title="stylebot", lifespan=lifespan)

    def _error(status: int, message: str) -> JSONResponse:
        return JSONResponse({"error": message}, status_code=status)

    @app.post("/api/chat")
    async def chat(request: Request) -> JSONResponse:
        if state["engine"] is None:
            return _error(503, "engine loading")
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError:
            return _error(400, "malformed request body")
        if not isinstance(body, dict):
            return _error(400, "malformed request body")
        utterance = body.get("utterance")
        if not isinstance(utterance, str) or not utterance.strip():
            return _error(400, "empty input")
        tokens = tokenize(utterance)
        if not tokens:
            return _error(400, "empty input")
        with counter_lock:
            counter["n"] += 1
            turn_id = f"t{counter['n']}"
        final, trace = respond(state["engine"], tokens, turn_id)
        traces.put(turn_id, trace.to_json())
        return JSONResponse(
            {
                "response": " ".join(final),
                "route": trace.route_label,
                "turn_id": turn_id,
                "trace_ref": f"/api/trace/{turn_id}",
            }
        )

    @app.get("/api/trace/{turn_id}")
    def get_trace(turn_id: str) -> JSONResponse:
        if state["engine"] is None:
            return _error(503, "engine loading")
        trace = traces.get(turn_id)
        if trace is None:
            return _error(404, "unknown trace")
        return JSONResponse(trace)

    @app.get("/api/health")
    def health() -> JSONResponse:
        engine_ready = state["engine"] is not None
        body = {
            "status": "ok" if engine_ready else ("error" if state["error"] else "loading"),
            "components": {
                "router": engine_ready,
                "style_generator": engine_ready,
                "general_generator": engine_ready,
                "graph": engine_ready,
                "style_lm": engine_ready,
                "tagger": engine_ready,
                "fallbacks": engine_ready,
            },
        }
        if state["error"]:
            body["error"] = state["error"]
        return JSONResponse(body)

    ui = _ui_dir()
    if ui is not None:
        app.mount("/", StaticFiles(directory=str(ui), html=True), name="ui")
    else:
        @app.get("/")
        def index() -> HTMLResponse:
            return HTMLResponse(_FALLBACK_PAGE)

    return app


def serve(manifest_path: str | Path, bind: str = "127.0.0.1:8000") -> None:
    """Run the service with uvicorn (blocking)."""
    import uvicorn

    host, _, port = bind.partition(":")
    app = create_app(manifest_path=manifest_path)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")
