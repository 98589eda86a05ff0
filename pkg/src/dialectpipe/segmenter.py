"""Fixed-window segmentation of audio with aligned text chunks.

Each recording is cut into equal windows (default 5 seconds); the trailing
remainder is truncated so every segment has identical length. Paired
dialect/standard texts are split into the same number of contiguous chunks
so segment k can be trained or scored against text chunk k.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Iterator, Sequence

import numpy as np

from .audio_io import TARGET_RATE, AudioSignal, read_wav
from .errors import AnnotationMismatch, NotStandardized, ZeroChunks
from .textnorm import tokenize

if TYPE_CHECKING:
    from .corpus import UtteranceRecord

log = logging.getLogger(__name__)

DEFAULT_WINDOW_S = 5.0


@dataclass(frozen=True)
class Segment:
    """One fixed-length audio window; index_k is 1-based."""

    parent_id: str
    index_k: int
    audio: AudioSignal


@dataclass(frozen=True)
class TextChunk:
    """Aligned dialect/standard token chunks for one segment index."""

    parent_id: str
    index_k: int
    dialect_text: tuple[str, ...]
    standard_text: tuple[str, ...]


@dataclass(frozen=True)
class AlignedChunk:
    """The fine-tuning unit: an audio segment paired with its text chunk."""

    segment: Segment
    text: TextChunk

    def __post_init__(self):
        if (
            self.segment.parent_id != self.text.parent_id
            or self.segment.index_k != self.text.index_k
        ):
            raise ValueError("segment and text chunk do not address the same slot")


def window_samples(window_s: float = DEFAULT_WINDOW_S, sample_rate: int = TARGET_RATE) -> int:
    """Window length in samples; must be positive."""
    n = round(window_s * sample_rate)
    if n <= 0:
        raise ValueError(f"window of {window_s}s at {sample_rate} Hz is empty")
    return n


def segment_count(
    duration_s: float, window_s: float = DEFAULT_WINDOW_S, sample_rate: int = TARGET_RATE
) -> int:
    """floor(duration / window), computed on exact sample counts.

    Durations are converted to sample counts before dividing so a
    floating-point duration that is an exact multiple of the window never
    loses a segment to rounding. Zero is a valid result.
    """
    if duration_s < 0:
        raise ValueError(f"negative duration {duration_s}")
    return round(duration_s * sample_rate) // window_samples(window_s, sample_rate)


def split_audio(sig: AudioSignal, window_s: float = DEFAULT_WINDOW_S) -> list[Segment]:
    """Cut a standardized signal into fixed windows, truncating the tail.

    Segment k covers samples [(k-1)*W, k*W); concatenating all segments
    reproduces the input prefix bit-exactly. Inputs shorter than one window
    yield an empty list plus a logged warning.
    """
    if sig.sample_rate != TARGET_RATE:
        raise NotStandardized(
            f"split_audio requires {TARGET_RATE} Hz input, got {sig.sample_rate} Hz"
        )
    w = window_samples(window_s, sig.sample_rate)
    n = len(sig) // w
    if n == 0:
        log.warning(
            "recording %r is %.3fs, shorter than the %.3fs window; skipped",
            sig.source_id,
            sig.duration_seconds,
            window_s,
        )
        return []
    return [
        Segment(
            parent_id=sig.source_id,
            index_k=k + 1,
            audio=AudioSignal(sig.samples[k * w : (k + 1) * w], sig.sample_rate, sig.source_id),
        )
        for k in range(n)
    ]


def iter_split_audio(
    blocks: Iterable[np.ndarray],
    parent_id: str,
    window_s: float = DEFAULT_WINDOW_S,
    sample_rate: int = TARGET_RATE,
) -> Iterator[Segment]:
    """Streaming variant of :func:`split_audio` over sample blocks.

    Buffers at most one window of samples, so arbitrarily long recordings
    (the full 10-hour corpus) segment in constant memory. The trailing
    remainder is dropped exactly as in the in-memory version.
    """
    w = window_samples(window_s, sample_rate)
    pending: list[np.ndarray] = []
    buffered = 0
    k = 0
    for block in blocks:
        block = np.asarray(block, dtype=np.float64)
        pending.append(block)
        buffered += len(block)
        while buffered >= w:
            merged = np.concatenate(pending) if len(pending) > 1 else pending[0]
            k += 1
            yield Segment(
                parent_id=parent_id,
                index_k=k,
                audio=AudioSignal(merged[:w], sample_rate, parent_id),
            )
            rest = merged[w:]
            pending = [rest] if len(rest) else []
            buffered = len(rest)
    if k == 0:
        log.warning("stream %r ended below one window; no segments", parent_id)


def split_text(tokens: Sequence[str], n_chunks: int) -> list[tuple[str, ...]]:
    """Split a token sequence into n contiguous chunks.

    Chunk k gets tokens [floor((k-1)*W/n), floor(k*W/n)); concatenating the
    chunks reproduces the input exactly, and chunks may be empty when there
    are fewer tokens than chunks.
    """
    if n_chunks == 0:
        raise ZeroChunks("cannot split text into zero chunks")
    if n_chunks < 0:
        raise ValueError(f"negative chunk count {n_chunks}")
    total = len(tokens)
    bounds = [(k * total) // n_chunks for k in range(n_chunks + 1)]
    return [tuple(tokens[bounds[k] : bounds[k + 1]]) for k in range(n_chunks)]


def align(
    record: "UtteranceRecord",
    window_s: float = DEFAULT_WINDOW_S,
    sig: AudioSignal | None = None,
) -> list[AlignedChunk]:
    """Pair each audio segment of a record with its text chunks.

    Explicit per-chunk annotations on the record take precedence over
    automatic splitting but must match the segment count exactly
    (:class:`AnnotationMismatch` otherwise). With automatic splitting the
    full token sequences distribute over the kept segments; trailing audio
    is truncated but no tokens are discarded.
    """
    if sig is None:
        sig = read_wav(record.audio_path)
    if sig.source_id != record.id:
        sig = AudioSignal(sig.samples, sig.sample_rate, record.id)
    segments = split_audio(sig, window_s)
    n = len(segments)
    if n == 0:
        return []

    if record.explicit_chunks is not None:
        if len(record.explicit_chunks) != n:
            raise AnnotationMismatch(
                f"record {record.id!r} has {len(record.explicit_chunks)} annotated "
                f"chunks but {n} audio segments"
            )
        dialect_chunks = [tuple(tokenize(d)) for d, _ in record.explicit_chunks]
        standard_chunks = [tuple(tokenize(s)) for _, s in record.explicit_chunks]
    else:
        dialect_chunks = split_text(tokenize(record.dialect_text), n)
        standard_chunks = split_text(tokenize(record.standard_text), n)

    return [
        AlignedChunk(
            segment=seg,
            text=TextChunk(
                parent_id=record.id,
                index_k=seg.index_k,
                dialect_text=dialect_chunks[i],
                standard_text=standard_chunks[i],
            ),
        )
        for i, seg in enumerate(segments)
    ]
