"""FastAPI service implementing the stage protocol bit-for-bit.

Same JSON schema, id echo, and error envelope as the pipeline's mock
server: POST /v1/{asr,mt,tts}, GET /v1/health. Invalid requests answer
400 with an ``invalid_request`` envelope; per-request application errors
answer 200 with an envelope (``stage_unavailable``, ``empty_text``,
``inference_failed``) so clients never retry non-transient failures.
"""

from __future__ import annotations

import argparse
import base64
import logging
import sys

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .config import AdapterConfig, StartupFailure, from_env
from .engines import SAMPLE_RATE, EngineSet

log = logging.getLogger(__name__)

STAGES = ("asr", "mt", "tts")

# Required / optional request fields per stage, beyond stage + id.
_REQUIRED = {"asr": {"audio_b64", "sample_rate"}, "mt": {"text"}, "tts": {"text"}}
_OPTIONAL = {"asr": set(), "mt": set(), "tts": {"sample_rate"}}


class StageRequestBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    stage: str
    id: str
    sample_rate: int | None = None
    audio_b64: str | None = None
    text: str | None = None


def _envelope(req_id: str | None, code: str, message: str, status: int = 200):
    body: dict = {"error": {"code": code, "message": message}}
    if req_id is not None:
        body["id"] = req_id
    return JSONResponse(status_code=status, content=body)


def _validate(body: StageRequestBody, path_stage: str) -> str | None:
    if body.stage != path_stage:
        return f"posted to /v1/{path_stage} but request says {body.stage!r}"
    if not body.id:
        return "request id must be non-empty"
    present = {
        name
        for name in ("sample_rate", "audio_b64", "text")
        if getattr(body, name) is not None
    }
    required = _REQUIRED[path_stage]
    missing = required - present
    if missing:
        return f"{path_stage} request missing fields: {sorted(missing)}"
    extra = present - (required | _OPTIONAL[path_stage])
    if extra:
        return f"{path_stage} request carries foreign fields: {sorted(extra)}"
    return None


def _decode_pcm(audio_b64: str) -> np.ndarray:
    raw = base64.b64decode(audio_b64)
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0


def _encode_pcm(samples: np.ndarray) -> str:
    q = np.clip(np.rint(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")
    return base64.b64encode(q.tobytes()).decode("ascii")


def create_app(cfg: AdapterConfig, engines: EngineSet | None = None) -> FastAPI:
    """Build the service; loads engines eagerly so bad refs fail at startup."""
    cfg.validate()
    engines = engines or EngineSet.load(cfg.configured_stages(), cfg.device)
    app = FastAPI(title="stage-adapter", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return _envelope(None, "invalid_request", str(exc.errors()[:1]), status=400)

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "stages": engines.stages()}

    @app.post("/v1/{stage}")
    def run_stage(stage: str, body: StageRequestBody):
        if stage not in STAGES:
            return _envelope(body.id, "not_found", f"unknown stage {stage!r}", status=404)
        problem = _validate(body, stage)
        if problem:
            return _envelope(body.id, "invalid_request", problem, status=400)
        if not engines.has(stage):
            return _envelope(body.id, "stage_unavailable", f"{stage} has no model loaded")
        try:
            if stage == "asr":
                samples = _decode_pcm(body.audio_b64)
                text = engines.run("asr", "transcribe", samples, body.sample_rate)
                return {"id": body.id, "text": text}
            if stage == "mt":
                text = engines.run("mt", "translate", body.text)
                return {"id": body.id, "text": text}
            if not body.text.split():
                return _envelope(body.id, "empty_text", "no tokens to synthesize")
            audio = engines.run("tts", "synthesize", body.text)
            return {"id": body.id, "audio_b64": _encode_pcm(audio)}
        except Exception as exc:  # stable per-request error code, never a 500
            log.exception("inference failed for %s %s", stage, body.id)
            return _envelope(body.id, "inference_failed", str(exc))

    return app


def serve(cfg: AdapterConfig) -> None:
    """Run until interrupted; raises StartupFailure for unloadable models."""
    import uvicorn

    app = create_app(cfg)
    log.info(
        "stage-adapter serving %s on %s:%d (rate %d Hz)",
        "/".join(sorted(cfg.configured_stages())),
        cfg.host,
        cfg.port,
        SAMPLE_RATE,
    )
    uvicorn.run(
        app, host=cfg.host, port=cfg.port, limit_concurrency=cfg.max_connections
    )


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO)
    parser = argparse.ArgumentParser(prog="stage-adapter", description=__doc__)
    parser.add_argument("--asr-model", help="e.g. hf:openai/whisper-small or dummy:test")
    parser.add_argument("--mt-model")
    parser.add_argument("--tts-model")
    parser.add_argument("--device", default=None)
    parser.add_argument("--port", type=int, default=None)
    parser.add_argument("--host", default=None)
    args = parser.parse_args(argv)
    base = from_env()
    cfg = AdapterConfig(
        asr_model_ref=args.asr_model or base.asr_model_ref,
        mt_model_ref=args.mt_model or base.mt_model_ref,
        tts_model_ref=args.tts_model or base.tts_model_ref,
        device=args.device or base.device,
        port=args.port if args.port is not None else base.port,
        host=args.host or base.host,
        max_connections=base.max_connections,
    )
    try:
        serve(cfg)
    except StartupFailure as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
