"""Exception hierarchy shared across the toolkit.

Two families matter to callers: ``DataError`` (malformed or impossible
inputs) and ``BackendError`` (a model stage is unreachable or answered
incorrectly). The CLI maps them to exit codes 2 and 3 respectively.
"""

from __future__ import annotations


class DialectPipeError(Exception):
    """Base class for all toolkit errors."""


class DataError(DialectPipeError):
    """Bad input data: files, manifests, texts, or request payloads."""


class BackendError(DialectPipeError):
    """A model stage backend failed or misbehaved."""


# --- audio-io ---

class MalformedContainer(DataError):
    """RIFF/WAVE structure is broken (bad header, truncated chunk)."""


class UnsupportedEncoding(DataError):
    """WAV codec other than integer PCM or 32-bit float PCM."""


class EmptyAudio(DataError):
    """Audio payload contains zero frames."""


class NotStandardized(DataError):
    """Operation requires corpus-format audio (16 kHz mono)."""


class IoFailure(DataError):
    """Underlying file operation failed."""


# --- denoise ---

class TooShort(DataError):
    """Signal shorter than one analysis frame."""


class ProfileMismatch(DataError):
    """Noise profile was estimated with a different transform size."""


# --- segmenter ---

class ZeroChunks(DataError):
    """Text split requested with zero chunks."""


class AnnotationMismatch(DataError):
    """Explicit per-chunk annotations disagree with the segment count."""


# --- corpus ---

class SchemaViolation(DataError):
    """Manifest line violates the JSONL record schema."""


class InsufficientRecords(DataError):
    """Requested split sizes exceed the number of records."""


# --- metrics ---

class DivisionByEmptyReference(DataError):
    """Reference is empty after normalization; the rate is undefined."""


class LengthMismatch(DataError):
    """Reference and hypothesis corpora differ in length."""


class EmptyCorpus(DataError):
    """No pairs to evaluate."""


# --- stage protocol ---

class InvalidStageRequest(DataError):
    """Request carries fields that do not belong to its stage."""


class EmptyText(DataError):
    """TTS request with no tokens to synthesize."""


class Timeout(BackendError):
    """Backend did not answer within the deadline after all retries."""

    def __init__(self, message: str, attempts: list[str] | None = None):
        super().__init__(message)
        self.attempts = attempts or []


class Unreachable(BackendError):
    """Backend could not be contacted after all retries."""

    def __init__(self, message: str, attempts: list[str] | None = None):
        super().__init__(message)
        self.attempts = attempts or []


class IdMismatch(BackendError):
    """Backend echoed the wrong chunk id."""


class RemoteError(BackendError):
    """Backend answered with an error envelope."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


# --- pipeline ---

class NoBackends(BackendError):
    """No stage backends configured or health check failed."""


class AllChunksFailed(BackendError):
    """Every chunk in the run failed; partial results were still written."""


class MissingReference(DataError):
    """Evaluation references lack entries for some result ids."""

    def __init__(self, ids: list[str]):
        super().__init__(f"no reference for ids: {', '.join(ids)}")
        self.ids = ids
