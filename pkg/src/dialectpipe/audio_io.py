"""Read, write, and standardize PCM audio to the corpus format.

Corpus format is 16 kHz, mono, 16-bit. Internally samples stay as
normalized float64 amplitudes; quantization happens only at WAV write so
the denoiser and resampler keep full precision. Amplitudes are clipped to
[-1, 1] at standardization and quantization, never wrapped.
"""

from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass
from functools import lru_cache
from math import ceil, gcd
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

from .errors import (
    EmptyAudio,
    IoFailure,
    MalformedContainer,
    NotStandardized,
    UnsupportedEncoding,
)

log = logging.getLogger(__name__)

TARGET_RATE = 16000

# int16 full scale; +1.0 clips to 32767 on encode, -32768 decodes to -1.0.
INT16_FULL_SCALE = 32768.0

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True, eq=False)
class AudioSignal:
    """Immutable mono signal: normalized float64 samples plus rate metadata.

    Safe to share between worker threads; the sample buffer is read-only.
    """

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("AudioSignal samples must be 1-D (mono)")
        arr = arr.view()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate


def encode_pcm16(samples: np.ndarray) -> bytes:
    """Quantize normalized amplitudes to little-endian int16 bytes.

    Out-of-range values clip to the int16 limits; they are never wrapped.
    """
    q = np.rint(np.asarray(samples, dtype=np.float64) * INT16_FULL_SCALE)
    q = np.clip(q, -32768, 32767)
    return q.astype("<i2").tobytes()


def decode_pcm16(data: bytes) -> np.ndarray:
    """Inverse of :func:`encode_pcm16`; error stays within 1/32768."""
    if len(data) % 2:
        raise MalformedContainer("PCM16 payload has an odd byte count")
    return np.frombuffer(data, dtype="<i2").astype(np.float64) / INT16_FULL_SCALE


def _parse_fmt_chunk(body: bytes) -> tuple[int, int, int, int, int]:
    if len(body) < 16:
        raise MalformedContainer("fmt chunk shorter than 16 bytes")
    tag, channels, rate, _byte_rate, block_align, bits = struct.unpack(
        "<HHIIHH", body[:16]
    )
    if tag == _WAVE_FORMAT_EXTENSIBLE:
        # Actual codec lives in the first two bytes of the SubFormat GUID.
        if len(body) < 40:
            raise MalformedContainer("extensible fmt chunk shorter than 40 bytes")
        tag = struct.unpack("<H", body[24:26])[0]
    return tag, channels, rate, block_align, bits


def _decode_frames(raw: bytes, tag: int, bits: int) -> np.ndarray:
    """Normalize interleaved PCM bytes to float64 by the format full scale."""
    if tag == _WAVE_FORMAT_PCM:
        if bits == 8:
            return (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
        if bits == 16:
            return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
        if bits == 24:
            b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.uint32)
            val = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
            val = (val ^ 0x800000).astype(np.int64) - 0x800000
            return val.astype(np.float64) / 8388608.0
        if bits == 32:
            return np.frombuffer(raw, dtype="<i4").astype(np.float64) / 2147483648.0
        raise UnsupportedEncoding(f"{bits}-bit integer PCM is not supported")
    if tag == _WAVE_FORMAT_IEEE_FLOAT:
        if bits == 32:
            return np.frombuffer(raw, dtype="<f4").astype(np.float64)
        raise UnsupportedEncoding(f"{bits}-bit float PCM is not supported")
    raise UnsupportedEncoding(f"WAV format tag 0x{tag:04x} is not PCM")


def _iter_chunks(data: bytes):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedContainer("not a RIFF/WAVE container")
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        body = data[pos + 8 : pos + 8 + size]
        yield cid, size, body
        pos += 8 + size + (size & 1)  # chunks are word-aligned


def read_wav(path) -> AudioSignal:
    """Load a RIFF/WAVE PCM file as a normalized mono signal.

    Multi-channel content is downmixed by the arithmetic mean of its
    channels. Raises :class:`MalformedContainer` on structural damage,
    :class:`UnsupportedEncoding` for non-PCM codecs, and
    :class:`EmptyAudio` for zero frames.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    fmt = None
    raw = None
    for cid, size, body in _iter_chunks(data):
        if cid == b"fmt ":
            if len(body) < size:
                raise MalformedContainer("truncated fmt chunk")
            fmt = _parse_fmt_chunk(body)
        elif cid == b"data":
            if len(body) < size:
                raise MalformedContainer(
                    f"truncated data chunk: header says {size} bytes, "
                    f"{len(body)} present"
                )
            raw = body
    if fmt is None:
        raise MalformedContainer("missing fmt chunk")
    if raw is None:
        raise MalformedContainer("missing data chunk")

    tag, channels, rate, block_align, bits = fmt
    if channels < 1 or rate < 1:
        raise MalformedContainer(f"fmt chunk declares {channels} channels @ {rate} Hz")
    expected_align = channels * (bits // 8)
    if block_align != expected_align:
        raise MalformedContainer(
            f"block align {block_align} != channels*bytes {expected_align}"
        )
    if len(raw) % block_align:
        raise MalformedContainer("data chunk holds a partial frame")
    if len(raw) == 0:
        raise EmptyAudio(f"{path} has zero frames")

    flat = _decode_frames(raw, tag, bits)
    if channels > 1:
        samples = flat.reshape(-1, channels).mean(axis=1)
    else:
        samples = flat
    return AudioSignal(samples, rate, source_id=path.stem)


def wav_info(path) -> tuple[int, int]:
    """Frame count and sample rate from the headers, without decoding audio."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(12)
            if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
                raise MalformedContainer(f"{path}: not a RIFF/WAVE container")
            fmt = None
            data_size = None
            while True:
                hdr = fh.read(8)
                if len(hdr) < 8:
                    break
                cid = hdr[:4]
                (size,) = struct.unpack("<I", hdr[4:])
                if cid == b"fmt ":
                    fmt = _parse_fmt_chunk(fh.read(size))
                    if size & 1:
                        fh.seek(1, os.SEEK_CUR)
                elif cid == b"data":
                    data_size = size
                    fh.seek(size + (size & 1), os.SEEK_CUR)
                else:
                    fh.seek(size + (size & 1), os.SEEK_CUR)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if fmt is None or data_size is None:
        raise MalformedContainer(f"{path}: missing fmt or data chunk")
    _tag, channels, rate, block_align, _bits = fmt
    if block_align == 0:
        raise MalformedContainer(f"{path}: zero block align")
    return data_size // block_align, rate


def write_wav(sig: AudioSignal, path) -> None:
    """Emit 16-bit PCM little-endian RIFF/WAVE at 16 kHz mono.

    Write is atomic (temp file + rename). Raises :class:`NotStandardized`
    for other sample rates.
    """
    if sig.sample_rate != TARGET_RATE:
        raise NotStandardized(
            f"write_wav requires {TARGET_RATE} Hz, got {sig.sample_rate} Hz"
        )
    payload = encode_pcm16(sig.samples)
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        _WAVE_FORMAT_PCM,
        1,
        TARGET_RATE,
        TARGET_RATE * 2,
        2,
        16,
        b"data",
        len(payload),
    )
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(header + payload)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise IoFailure(f"cannot write {path}: {exc}") from exc


@lru_cache(maxsize=32)
def _design_resampler(in_rate: int, out_rate: int):
    """Kaiser-windowed sinc for polyphase resampling.

    64 taps per phase, cutoff at 0.45 x the lower of the two rates (90% of
    the tighter Nyquist) so aliases are suppressed before decimation. Odd
    length keeps the group delay integral. beta 8.6 gives ~90 dB stopband.
    """
    g = gcd(in_rate, out_rate)
    up, down = out_rate // g, in_rate // g
    cutoff_hz = 0.45 * min(in_rate, out_rate)
    n_taps = 64 * up + 1
    m = np.arange(n_taps) - (n_taps - 1) / 2
    fc = cutoff_hz / (in_rate * up)  # cycles per upsampled sample
    h = 2.0 * fc * np.sinc(2.0 * fc * m) * np.kaiser(n_taps, 8.6)
    return h, up, down


def standardize(sig: AudioSignal) -> AudioSignal:
    """Convert to the 16 kHz corpus rate with band-limited interpolation.

    Already-standard input is returned unchanged sample-for-sample, which
    makes the operation idempotent. Output duration stays within one
    sample period of the input duration; amplitudes are clipped to [-1, 1].
    """
    if len(sig) == 0:
        raise EmptyAudio("cannot standardize an empty signal")
    if sig.sample_rate == TARGET_RATE:
        if sig.samples.min() >= -1.0 and sig.samples.max() <= 1.0:
            return sig
        return AudioSignal(np.clip(sig.samples, -1.0, 1.0), TARGET_RATE, sig.source_id)
    h, up, down = _design_resampler(sig.sample_rate, TARGET_RATE)
    out = resample_poly(sig.samples, up, down, window=h)
    # resample_poly yields ceil(n*up/down) samples: within one period.
    assert len(out) == ceil(len(sig) * up / down)
    return AudioSignal(np.clip(out, -1.0, 1.0), TARGET_RATE, sig.source_id)
