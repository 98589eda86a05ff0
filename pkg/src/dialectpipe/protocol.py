"""Wire protocol between the orchestrator and ASR/MT/TTS backends.

JSON over HTTP POST, one chunk per request, to /v1/{stage}. Audio rides as
base64-encoded 16-bit little-endian PCM with an explicit sample_rate; no
WAV header. Responses always echo the request id; an error envelope and a
payload are mutually exclusive.
"""

from __future__ import annotations

import base64
import logging
import random
import threading
import time
from dataclasses import dataclass

import numpy as np
import requests

from .audio_io import decode_pcm16, encode_pcm16
from .errors import (
    IdMismatch,
    InvalidStageRequest,
    RemoteError,
    Timeout,
    Unreachable,
)

log = logging.getLogger(__name__)

STAGES = ("asr", "mt", "tts")

# Fields each stage's request must and may carry, beyond stage + id.
_REQUIRED = {"asr": {"audio_b64", "sample_rate"}, "mt": {"text"}, "tts": {"text"}}
_OPTIONAL = {"asr": set(), "mt": set(), "tts": {"sample_rate"}}

_BACKOFF_BASE_S = 0.25
_BACKOFF_FACTOR = 2.0
_BACKOFF_JITTER = 0.2


@dataclass(frozen=True)
class StageRequest:
    stage: str
    id: str
    sample_rate: int | None = None
    audio_b64: str | None = None
    text: str | None = None


@dataclass(frozen=True)
class StageResponse:
    id: str
    text: str | None = None
    audio_b64: str | None = None
    error: dict | None = None  # {"code", "message"}


def audio_to_b64(samples: np.ndarray) -> str:
    return base64.b64encode(encode_pcm16(samples)).decode("ascii")


def b64_to_audio(audio_b64: str) -> np.ndarray:
    return decode_pcm16(base64.b64decode(audio_b64))


def validate_request(req: StageRequest) -> None:
    """Reject requests whose fields do not match their stage."""
    if req.stage not in STAGES:
        raise InvalidStageRequest(f"unknown stage {req.stage!r}")
    if not req.id:
        raise InvalidStageRequest("request id must be non-empty")
    present = {
        name
        for name in ("sample_rate", "audio_b64", "text")
        if getattr(req, name) is not None
    }
    required = _REQUIRED[req.stage]
    allowed = required | _OPTIONAL[req.stage]
    missing = required - present
    if missing:
        raise InvalidStageRequest(
            f"{req.stage} request missing fields: {sorted(missing)}"
        )
    extra = present - allowed
    if extra:
        raise InvalidStageRequest(
            f"{req.stage} request carries foreign fields: {sorted(extra)}"
        )


def encode_request(req: StageRequest) -> dict:
    obj = {"stage": req.stage, "id": req.id}
    for name in ("sample_rate", "audio_b64", "text"):
        value = getattr(req, name)
        if value is not None:
            obj[name] = value
    return obj


def decode_request(obj: dict) -> StageRequest:
    if not isinstance(obj, dict):
        raise InvalidStageRequest("request body must be a JSON object")
    known = {"stage", "id", "sample_rate", "audio_b64", "text"}
    unknown = set(obj) - known
    if unknown:
        raise InvalidStageRequest(f"unknown request fields: {sorted(unknown)}")
    if "stage" not in obj or "id" not in obj:
        raise InvalidStageRequest("request needs stage and id")
    return StageRequest(
        stage=obj["stage"],
        id=obj["id"],
        sample_rate=obj.get("sample_rate"),
        audio_b64=obj.get("audio_b64"),
        text=obj.get("text"),
    )


def encode_response(resp: StageResponse) -> dict:
    obj = {"id": resp.id}
    for name in ("text", "audio_b64", "error"):
        value = getattr(resp, name)
        if value is not None:
            obj[name] = value
    return obj


def decode_response(obj: dict) -> StageResponse:
    if not isinstance(obj, dict) or "id" not in obj:
        raise RemoteError("bad_response", "response lacks an id")
    resp = StageResponse(
        id=obj["id"],
        text=obj.get("text"),
        audio_b64=obj.get("audio_b64"),
        error=obj.get("error"),
    )
    has_payload = resp.text is not None or resp.audio_b64 is not None
    if resp.error is not None and has_payload:
        raise RemoteError("bad_response", "error and payload are mutually exclusive")
    return resp


# One in-flight cap per endpoint so batch runs do not swamp model servers.
_inflight_lock = threading.Lock()
_inflight: dict[str, threading.BoundedSemaphore] = {}


def _endpoint_slot(endpoint: str, max_inflight: int) -> threading.BoundedSemaphore:
    with _inflight_lock:
        if endpoint not in _inflight:
            _inflight[endpoint] = threading.BoundedSemaphore(max_inflight)
        return _inflight[endpoint]


def check_health(endpoint: str, timeout: float = 10.0) -> bool:
    """True when GET /v1/health answers {"status": "ok"}."""
    try:
        resp = requests.get(endpoint.rstrip("/") + "/v1/health", timeout=timeout)
        return resp.status_code == 200 and resp.json().get("status") == "ok"
    except (requests.RequestException, ValueError):
        return False


def call_stage(
    endpoint: str,
    req: StageRequest,
    timeout: float = 60.0,
    retries: int = 2,
    max_inflight: int = 4,
    session: requests.Session | None = None,
) -> StageResponse:
    """POST a stage request, retrying transient failures with backoff.

    Connection failures, timeouts, and 5xx answers are retried up to
    ``retries`` times (base 250 ms, doubling, +/-20% jitter). Application
    errors (an error envelope or a 4xx) are not retried. The response id
    must echo the request id.
    """
    validate_request(req)
    url = endpoint.rstrip("/") + f"/v1/{req.stage}"
    body = encode_request(req)
    post = (session or requests).post
    attempts: list[str] = []
    slot = _endpoint_slot(endpoint, max_inflight)
    last_kind = "unreachable"
    for attempt in range(retries + 1):
        if attempt:
            delay = _BACKOFF_BASE_S * _BACKOFF_FACTOR ** (attempt - 1)
            delay *= 1.0 + random.uniform(-_BACKOFF_JITTER, _BACKOFF_JITTER)
            time.sleep(delay)
        try:
            with slot:
                http = post(url, json=body, timeout=timeout)
        except requests.Timeout as exc:
            attempts.append(f"attempt {attempt + 1}: timeout: {exc}")
            last_kind = "timeout"
            continue
        except requests.RequestException as exc:
            attempts.append(f"attempt {attempt + 1}: connection: {exc}")
            last_kind = "unreachable"
            continue
        if http.status_code >= 500:
            attempts.append(f"attempt {attempt + 1}: HTTP {http.status_code}")
            last_kind = "server_error"
            continue
        try:
            payload = http.json()
        except ValueError as exc:
            raise RemoteError("bad_response", f"non-JSON response: {exc}")
        resp = decode_response(payload)
        if resp.error is not None:
            raise RemoteError(
                str(resp.error.get("code", "unknown")),
                str(resp.error.get("message", "")),
            )
        if http.status_code != 200:
            raise RemoteError("http_error", f"HTTP {http.status_code}")
        if resp.id != req.id:
            raise IdMismatch(f"sent id {req.id!r}, got {resp.id!r}")
        return resp
    detail = f"{url} failed after {len(attempts)} attempts"
    if last_kind == "timeout":
        raise Timeout(detail, attempts)
    if last_kind == "server_error":
        raise RemoteError("server_error", "; ".join(attempts))
    raise Unreachable(detail, attempts)
