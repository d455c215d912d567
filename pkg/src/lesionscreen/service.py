"""Consent-aware screening service.

Endpoints live under /api/v1: multipart predict (field name "image"),
health, and model-info. Uploads are persisted only when the request set
consent_to_store, as content-addressed sha256 files plus an append-only
consent ledger; no user identity is recorded. When a built web UI
directory is configured and present it is served at /.
"""

from __future__ import annotations

import base64
import hashlib
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, File, Form, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import engine, gradcam, imaging, model
from .errors import LesionScreenError, MalformedImage, UnsupportedFormat

CONFIG_VERSION = "svc/1"
ENV_PREFIX = "LESIONSCREEN_"

ADVICE = (
    "This is a screening aid, not a medical diagnosis. "
    "Consult a qualified clinician about any skin lesion, whatever this result says."
)


@dataclass
class ServiceConfig:
    model_path: Path | None = None
    host: str = "127.0.0.1"
    port: int = 8000
    threshold: float = engine.DEFAULT_THRESHOLD
    max_upload_bytes: int = 10 * 1024 * 1024
    storage_dir: Path = field(default_factory=lambda: Path("uploads"))
    webui_dir: Path | None = None


_CONFIG_KEYS = {
    "model": ("model_path", Path),
    "host": ("host", str),
    "port": ("port", int),
    "threshold": ("threshold", float),
    "max_upload_bytes": ("max_upload_bytes", int),
    "storage_dir": ("storage_dir", Path),
    "webui_dir": ("webui_dir", Path),
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    """Parse the svc/1 key = value file, then apply LESIONSCREEN_* overrides."""
    cfg = ServiceConfig()
    if path is not None:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        meaningful = [ln.strip() for ln in lines if ln.strip() and not ln.strip().startswith("#")]
        if not meaningful or meaningful[0] != CONFIG_VERSION:
            raise LesionScreenError(f"config must start with {CONFIG_VERSION!r}")
        for line in meaningful[1:]:
            key, sep, value = (part.strip() for part in line.partition("="))
            if not sep or key not in _CONFIG_KEYS:
                raise LesionScreenError(f"bad config line: {line!r}")
            attr, cast = _CONFIG_KEYS[key]
            setattr(cfg, attr, cast(value))
    env = os.environ if env is None else env
    for key, (attr, cast) in _CONFIG_KEYS.items():
        raw = env.get(ENV_PREFIX + key.upper())
        if raw is not None:
            setattr(cfg, attr, cast(raw))
    return cfg


def _parse_flag(value: str | bool) -> bool:
    if isinstance(value, bool):
        return value
    return value.strip().lower() in {"1", "true", "yes", "on"}


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="lesionscreen", version="1")
    app.state.config = config
    app.state.model = None
    app.state.started = time.monotonic()
    app.state.ledger_lock = threading.Lock()

    def load_model_file(path: Path) -> None:
        graph = model.load_model(Path(path).read_bytes())
        app.state.model = graph  # atomic swap; in-flight requests keep the old graph

    app.state.load_model_file = load_model_file
    if config.model_path is not None:
        load_model_file(config.model_path)

    def no_model() -> JSONResponse:
        return JSONResponse(status_code=503, content={"error": "model not loaded"})

    @app.get("/api/v1/health")
    def health():
        graph = app.state.model
        if graph is None:
            return JSONResponse(
                status_code=503,
                content={"status": "starting", "model_id": None, "uptime_seconds": _uptime()},
            )
        return {"status": "ok", "model_id": graph.model_id, "uptime_seconds": _uptime()}

    def _uptime() -> float:
        return round(time.monotonic() - app.state.started, 3)

    @app.get("/api/v1/model-info")
    def model_info():
        graph = app.state.model
        if graph is None:
            return no_model()
        return {
            "class_names": list(graph.class_names),
            "input_side": graph.input_side,
            "threshold": config.threshold,
            "format_version": f"LSW{model.FORMAT_VERSION}",
        }

    @app.post("/api/v1/predict")
    async def predict_endpoint(
        image: UploadFile = File(...),
        consent_to_store: str = Form("false"),
        want_heatmap: str = Form("false"),
    ):
        graph = app.state.model
        if graph is None:
            return no_model()
        data = await image.read()
        if len(data) > config.max_upload_bytes:
            return JSONResponse(
                status_code=413,
                content={"error": "PayloadTooLarge", "detail": f"limit {config.max_upload_bytes} bytes"},
            )
        if not data:
            return JSONResponse(
                status_code=400, content={"error": "MalformedImage", "detail": "empty upload"}
            )
        try:
            raster = imaging.decode_image(data)
        except (MalformedImage, UnsupportedFormat) as exc:
            return JSONResponse(
                status_code=400, content={"error": type(exc).__name__, "detail": str(exc)}
            )
        prediction = engine.predict(graph, raster, config.threshold)
        heatmap_b64 = None
        if _parse_flag(want_heatmap):
            target = graph.class_names.index(prediction.argmax_label)
            result = gradcam.grad_cam(graph, raster, target)
            base = imaging.crop_resize(raster, graph.input_side)
            heatmap_b64 = base64.b64encode(
                imaging.heatmap_overlay_png(base, result.heatmap)
            ).decode("ascii")
        if _parse_flag(consent_to_store):
            _store_upload(config, app.state.ledger_lock, data)
        return {
            "probabilities": dict(zip(graph.class_names, prediction.probabilities)),
            "suspected_mpox": prediction.suspected_mpox,
            "mpox_probability": prediction.mpox_probability,
            "advice": ADVICE,
            "heatmap": heatmap_b64,
            "model_id": graph.model_id,
        }

    if config.webui_dir is not None and Path(config.webui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(config.webui_dir), html=True))
    return app


def _store_upload(config: ServiceConfig, lock: threading.Lock, data: bytes) -> str:
    digest = hashlib.sha256(data).hexdigest()
    storage = Path(config.storage_dir)
    objects = storage / "objects"
    objects.mkdir(parents=True, exist_ok=True)
    (objects / digest).write_bytes(data)
    stamp = datetime.now(timezone.utc).isoformat()
    with lock:
        with open(storage / "consent.log", "a", encoding="utf-8") as fh:
            fh.write(f"{stamp}\t{digest}\tconsent=true\n")
    return digest


def run(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
