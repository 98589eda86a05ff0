"""Stage engines: model loading and inference behind tiny interfaces.

Each engine exposes one method taking protocol-level payloads (float
samples in, text out, and so on). Responses depend only on the request and
the loaded checkpoint; engines hold no per-request state. A lock around
inference serializes device work while the HTTP layer stays concurrent.
"""

from __future__ import annotations

import hashlib
import logging
import threading

import numpy as np

from .config import StartupFailure

log = logging.getLogger(__name__)

SAMPLE_RATE = 16000
_DUMMY_SECONDS_PER_TOKEN = 0.2


class AsrEngine:
    def transcribe(self, samples: np.ndarray, sample_rate: int) -> str:
        raise NotImplementedError


class MtEngine:
    def translate(self, text: str) -> str:
        raise NotImplementedError


class TtsEngine:
    def synthesize(self, text: str) -> np.ndarray:
        """Return float samples in [-1, 1] at SAMPLE_RATE."""
        raise NotImplementedError


class DummyAsr(AsrEngine):
    """Deterministic stub: a stable digest of the audio bytes as text."""

    def __init__(self, tag: str):
        self.tag = tag

    def transcribe(self, samples, sample_rate):
        digest = hashlib.sha1(np.asarray(samples, dtype="<f4").tobytes()).hexdigest()
        return f"{self.tag or 'dummy'} transcript {digest[:12]}"


class DummyMt(MtEngine):
    """Identity translation; enough to exercise the wire contract."""

    def __init__(self, tag: str):
        self.tag = tag

    def translate(self, text):
        return text


class DummyTts(TtsEngine):
    """Fixed 220 Hz sine, 0.2 s per whitespace token."""

    def __init__(self, tag: str):
        self.tag = tag

    def synthesize(self, text):
        tokens = text.split()
        n = round(len(tokens) * _DUMMY_SECONDS_PER_TOKEN * SAMPLE_RATE)
        t = np.arange(n) / SAMPLE_RATE
        return 0.25 * np.sin(2.0 * np.pi * 220.0 * t)


class HfAsr(AsrEngine):
    def __init__(self, model_ref: str, device: str):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise StartupFailure(
                "transformers not installed; install the 'models' extra"
            ) from exc
        try:
            self._pipe = pipeline(
                "automatic-speech-recognition", model=model_ref, device=device
            )
        except Exception as exc:
            raise StartupFailure(f"cannot load ASR checkpoint {model_ref!r}: {exc}") from exc

    def transcribe(self, samples, sample_rate):
        out = self._pipe(
            {"raw": np.asarray(samples, dtype=np.float32), "sampling_rate": sample_rate}
        )
        return out["text"].strip()


class HfMt(MtEngine):
    def __init__(self, model_ref: str, device: str):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise StartupFailure(
                "transformers not installed; install the 'models' extra"
            ) from exc
        try:
            self._pipe = pipeline("text2text-generation", model=model_ref, device=device)
        except Exception as exc:
            raise StartupFailure(f"cannot load MT checkpoint {model_ref!r}: {exc}") from exc

    def translate(self, text):
        return self._pipe(text)[0]["generated_text"].strip()


class HfTts(TtsEngine):
    def __init__(self, model_ref: str, device: str):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise StartupFailure(
                "transformers not installed; install the 'models' extra"
            ) from exc
        try:
            self._pipe = pipeline("text-to-speech", model=model_ref, device=device)
        except Exception as exc:
            raise StartupFailure(f"cannot load TTS checkpoint {model_ref!r}: {exc}") from exc

    def synthesize(self, text):
        out = self._pipe(text)
        audio = np.asarray(out["audio"], dtype=np.float64).reshape(-1)
        rate = int(out["sampling_rate"])
        if rate != SAMPLE_RATE:
            # nearest-sample resample; model rates are close enough for a
            # placeholder path, callers needing quality resample downstream
            idx = np.floor(np.arange(round(len(audio) * SAMPLE_RATE / rate)) * rate / SAMPLE_RATE)
            audio = audio[idx.astype(np.int64).clip(0, len(audio) - 1)]
        return np.clip(audio, -1.0, 1.0)


_BUILDERS = {
    ("dummy", "asr"): lambda tag, device: DummyAsr(tag),
    ("dummy", "mt"): lambda tag, device: DummyMt(tag),
    ("dummy", "tts"): lambda tag, device: DummyTts(tag),
    ("hf", "asr"): HfAsr,
    ("hf", "mt"): HfMt,
    ("hf", "tts"): HfTts,
}


def resolve_engine(stage: str, model_ref: str, device: str):
    scheme, _, rest = model_ref.partition(":")
    builder = _BUILDERS.get((scheme, stage))
    if builder is None:
        raise StartupFailure(
            f"unknown model reference {model_ref!r} for stage {stage!r}; "
            f"expected dummy:<tag> or hf:<model-id>"
        )
    log.info("loading %s engine from %s", stage, model_ref)
    return builder(rest, device)


class EngineSet:
    """Loaded engines plus the inference lock serializing device work."""

    def __init__(self, engines: dict):
        self.engines = engines
        self._lock = threading.Lock()

    @classmethod
    def load(cls, configured: dict[str, str], device: str) -> "EngineSet":
        return cls(
            {
                stage: resolve_engine(stage, ref, device)
                for stage, ref in configured.items()
            }
        )

    def stages(self) -> list[str]:
        return sorted(self.engines)

    def has(self, stage: str) -> bool:
        return stage in self.engines

    def run(self, stage: str, func_name: str, *args):
        with self._lock:
            return getattr(self.engines[stage], func_name)(*args)
