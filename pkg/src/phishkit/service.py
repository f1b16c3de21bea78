"""Real-time prediction service over a loaded model bundle.

Stateless request handling: every response is a pure function of the
loaded bundle and the request body, no outbound network calls are made,
and the bundle reference can be hot-swapped atomically between requests.
Error bodies are always {"code": ..., "message": ...}.
"""

from __future__ import annotations

import json
import time

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import bundle as bundle_mod
from .errors import MalformedUrl
from .predictor import Predictor

MAX_PREDICT_BODY = 16 * 1024
MAX_BATCH = 1000


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(
    bundle_path=None,
    predictor: Predictor | None = None,
    threshold: float | None = None,
    cors_origins: tuple[str, ...] = ("*",),
    ui_dir=None,
) -> FastAPI:
    app = FastAPI(title="phishkit", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.started = time.monotonic()
    app.state.predictor = predictor
    if bundle_path is not None:
        load_model(app, bundle_path, threshold)

    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    def _predict_one(raw_url) -> tuple[dict | None, JSONResponse | None]:
        if not isinstance(raw_url, str) or not raw_url.strip():
            return None, _error(400, "malformed_url", "url must be a non-empty string")
        t0 = time.perf_counter()
        try:
            detail = app.state.predictor.predict_detail(raw_url)
        except MalformedUrl as exc:
            return None, _error(400, "malformed_url", str(exc))
        detail["latency_ms"] = (time.perf_counter() - t0) * 1000.0
        return detail, None

    @app.get("/health")
    def health():
        uptime = time.monotonic() - app.state.started
        if app.state.predictor is None:
            return JSONResponse(
                status_code=503,
                content={"status": "no_model", "model_version": None, "uptime_s": uptime},
            )
        return {
            "status": "ok",
            "model_version": app.state.predictor.bundle.model_version,
            "uptime_s": uptime,
        }

    @app.post("/predict")
    async def predict(request: Request):
        body = await request.body()
        if len(body) > MAX_PREDICT_BODY:
            return _error(413, "body_too_large", f"body exceeds {MAX_PREDICT_BODY} bytes")
        try:
            payload = json.loads(body)
        except (ValueError, UnicodeDecodeError):
            return _error(400, "bad_json", "request body is not valid JSON")
        if not isinstance(payload, dict) or "url" not in payload:
            return _error(400, "bad_request", 'body must be {"url": "..."}')
        if app.state.predictor is None:
            return _error(503, "no_model", "no model bundle is loaded")
        detail, err = _predict_one(payload["url"])
        return err if err else detail

    @app.post("/predict_batch")
    async def predict_batch(request: Request):
        try:
            payload = json.loads(await request.body())
        except (ValueError, UnicodeDecodeError):
            return _error(400, "bad_json", "request body is not valid JSON")
        if not isinstance(payload, list) or not payload:
            return _error(400, "bad_request", "body must be a non-empty JSON array of urls")
        if len(payload) > MAX_BATCH:
            return _error(400, "batch_too_large", f"at most {MAX_BATCH} urls per batch")
        if app.state.predictor is None:
            return _error(503, "no_model", "no model bundle is loaded")
        results = []
        for raw_url in payload:
            detail, err = _predict_one(raw_url)
            if err is not None:
                results.append(
                    {
                        "url": raw_url if isinstance(raw_url, str) else None,
                        "error": json.loads(bytes(err.body)),
                    }
                )
            else:
                results.append(detail)
        return results

    return app


def load_model(app: FastAPI, bundle_path, threshold: float | None = None) -> None:
    """Build the predictor off to the side, then swap it in atomically."""
    loaded = bundle_mod.load(bundle_path)
    app.state.predictor = Predictor(loaded, threshold=threshold)


def serve(
    bundle_path,
    host: str = "127.0.0.1",
    port: int = 8080,
    threshold: float | None = None,
    cors_origins: tuple[str, ...] = ("*",),
    ui_dir=None,
) -> None:
    import uvicorn

    app = create_app(
        bundle_path=bundle_path,
        threshold=threshold,
        cors_origins=cors_origins,
        ui_dir=ui_dir,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")
