"""Deterministic in-process mock backends for the three stages.

Every mock is a pure function of its request plus fixture files, so full
pipeline runs are byte-reproducible without any neural model: ASR looks
chunks up by content hash, MT rewrites via a longest-match phrase
dictionary, TTS emits per-token sine placeholders with a fixed duration
law (0.2 s per token).
"""

from __future__ import annotations

import base64
import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from threading import Thread

import numpy as np

from .audio_io import TARGET_RATE
from .errors import DataError, EmptyText, InvalidStageRequest, IoFailure
from .protocol import (
    StageRequest,
    StageResponse,
    audio_to_b64,
    decode_request,
    encode_response,
    validate_request,
)
from .textnorm import tokenize

log = logging.getLogger(__name__)

# Phrase pairs every MT mock knows out of the box (dialect -> standard).
BUILTIN_MT_PAIRS = (
    ("Anne konai jan", "Apne kothay jan"),
    ("Science tun vala result koichi", "Science theke valo result korechi"),
    ("Bait kichu kam ase hellai aichi", "Barite kichu kaj ase tai esechi"),
    ("Ekmasher moto jaitami harina", "Ekmasher moto jatei parina"),
    ("Hete koto khn dhori boi ase", "She koto kokhn dhore bose ache"),
)

TTS_SECONDS_PER_TOKEN = 0.2
_TTS_BASE_HZ = 200.0
_TTS_STEP_HZ = 50.0
_TTS_FREQ_SLOTS = 16
_TTS_AMPLITUDE = 0.5


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over raw bytes."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def load_asr_fixtures(path) -> dict[int, str]:
    """Fixture table mapping PCM hash (16 hex digits) to dialect text."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    return {int(key, 16): str(text) for key, text in obj.items()}


def save_asr_fixtures(fixtures: dict[int, str], path) -> None:
    obj = {f"{key:016x}": text for key, text in fixtures.items()}
    Path(path).write_text(
        json.dumps(obj, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )


def load_mt_dictionary(path) -> dict[str, str]:
    """User phrase dictionary: JSON object of dialect -> standard phrases."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    return {str(k): str(v) for k, v in obj.items()}


class MockAsr:
    """Content-addressed transcription: FNV-1a of the PCM bytes keys a table."""

    def __init__(self, fixtures: dict[int, str] | None = None,
                 fallback: str = "‹unk:{hash:016x}›"):
        self.fixtures = dict(fixtures or {})
        self.fallback = fallback

    def __call__(self, req: StageRequest) -> StageResponse:
        validate_request(req)
        if req.stage != "asr":
            raise InvalidStageRequest(f"ASR mock got a {req.stage} request")
        pcm = base64.b64decode(req.audio_b64)
        key = fnv1a64(pcm)
        text = self.fixtures.get(key)
        if text is None:
            text = self.fallback.format(hash=key)
        return StageResponse(id=req.id, text=text)


class MockMt:
    """Longest-match phrase rewriting; unmatched tokens pass through."""

    def __init__(self, dictionaries: list[dict[str, str]] | None = None):
        self.phrases: dict[tuple[str, ...], str] = {}
        for src, dst in BUILTIN_MT_PAIRS:
            self.phrases[tuple(tokenize(src))] = dst
        for extra in dictionaries or []:
            for src, dst in extra.items():
                self.phrases[tuple(tokenize(src))] = dst
        self.max_phrase = max((len(k) for k in self.phrases), default=1)

    def __call__(self, req: StageRequest) -> StageResponse:
        validate_request(req)
        if req.stage != "mt":
            raise InvalidStageRequest(f"MT mock got a {req.stage} request")
        tokens = tokenize(req.text)
        out: list[str] = []
        i = 0
        while i < len(tokens):
            for size in range(min(self.max_phrase, len(tokens) - i), 0, -1):
                hit = self.phrases.get(tuple(tokens[i : i + size]))
                if hit is not None:
                    out.append(hit)
                    i += size
                    break
            else:
                out.append(tokens[i])
                i += 1
        return StageResponse(id=req.id, text=" ".join(out))


class MockTts:
    """Placeholder synthesis: one 0.2 s sine per token.

    Token j sounds at 200 + (j mod 16) * 50 Hz, so output duration is
    exactly 0.2 s x token count and identical text is bit-identical audio.
    """

    def __call__(self, req: StageRequest) -> StageResponse:
        validate_request(req)
        if req.stage != "tts":
            raise InvalidStageRequest(f"TTS mock got a {req.stage} request")
        tokens = tokenize(req.text)
        if not tokens:
            raise EmptyText(f"request {req.id!r} has no tokens to synthesize")
        rate = req.sample_rate or TARGET_RATE
        per_token = round(TTS_SECONDS_PER_TOKEN * rate)
        t = np.arange(per_token) / rate
        pieces = []
        for j, _tok in enumerate(tokens):
            freq = _TTS_BASE_HZ + (j % _TTS_FREQ_SLOTS) * _TTS_STEP_HZ
            pieces.append(_TTS_AMPLITUDE * np.sin(2.0 * np.pi * freq * t))
        return StageResponse(id=req.id, audio_b64=audio_to_b64(np.concatenate(pieces)))


def tts_duration_samples(text: str, rate: int = TARGET_RATE) -> int:
    """Samples the TTS mock will emit for a text; the mock's duration law."""
    return len(tokenize(text)) * round(TTS_SECONDS_PER_TOKEN * rate)


def mock_backends(
    asr_fixtures: dict[int, str] | None = None,
    mt_dictionaries: list[dict[str, str]] | None = None,
) -> dict:
    """The three mocks keyed by stage, ready for the orchestrator."""
    return {
        "asr": MockAsr(asr_fixtures),
        "mt": MockMt(mt_dictionaries),
        "tts": MockTts(),
    }


class _MockHandler(BaseHTTPRequestHandler):
    backends: dict = {}

    def _send_json(self, status: int, obj: dict) -> None:
        body = json.dumps(obj, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, fmt, *args):  # route through logging, not stderr prints
        log.debug("mock server: " + fmt, *args)

    def do_GET(self):
        if self.path == "/v1/health":
            self._send_json(200, {"status": "ok", "stages": sorted(self.backends)})
        else:
            self._send_json(404, {"error": {"code": "not_found", "message": self.path}})

    def do_POST(self):
        stage = self.path.rsplit("/", 1)[-1]
        if not self.path.startswith("/v1/") or stage not in self.backends:
            self._send_json(404, {"error": {"code": "not_found", "message": self.path}})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            obj = json.loads(self.rfile.read(length))
            req = decode_request(obj)
            if req.stage != stage:
                raise InvalidStageRequest(
                    f"posted to /v1/{stage} but request says {req.stage!r}"
                )
            validate_request(req)
        except (json.JSONDecodeError, DataError) as exc:
            self._send_json(
                400, {"error": {"code": "invalid_request", "message": str(exc)}}
            )
            return
        try:
            resp = self.backends[stage](req)
        except EmptyText as exc:
            self._send_json(
                200,
                encode_response(
                    StageResponse(
                        id=req.id, error={"code": "empty_text", "message": str(exc)}
                    )
                ),
            )
            return
        self._send_json(200, encode_response(resp))


class MockStageServer:
    """Threaded HTTP server exposing the mocks on /v1/{asr,mt,tts}."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        asr_fixtures: dict[int, str] | None = None,
        mt_dictionaries: list[dict[str, str]] | None = None,
        backends: dict | None = None,
    ):
        self.backends = backends or mock_backends(asr_fixtures, mt_dictionaries)
        handler = type("Handler", (_MockHandler,), {"backends": self.backends})
        self._server = ThreadingHTTPServer((host, port), handler)
        self._thread: Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockStageServer":
        self._thread = Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def serve_forever(self) -> None:
        log.info("mock stage server listening on %s", self.url)
        self._server.serve_forever()
