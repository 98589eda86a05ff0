import json
import struct

import numpy as np
import pytest

from dialectpipe.audio_io import AudioSignal, encode_pcm16, write_wav
from dialectpipe.corpus import CorpusManifest, UtteranceRecord, save_manifest
from dialectpipe.mocks import BUILTIN_MT_PAIRS, fnv1a64
from dialectpipe.pipeline import PipelineConfig, _prepare_chunks


def make_wav_bytes(samples, rate, channels=1, bits=16, fmt_tag=1, truncate_data=0):
    """Hand-packed RIFF/WAVE bytes so reader tests do not trust the writer."""
    frames = np.asarray(samples)
    if frames.ndim == 1:
        frames = frames[:, None]
        if channels > 1:
            frames = np.repeat(frames, channels, axis=1)
    flat = frames.reshape(-1)
    if fmt_tag == 1:
        if bits == 16:
            raw = np.clip(np.rint(flat * 32768.0), -32768, 32767).astype("<i2").tobytes()
        elif bits == 8:
            raw = (np.clip(np.rint(flat * 128.0), -128, 127) + 128).astype(np.uint8).tobytes()
        elif bits == 32:
            raw = np.clip(np.rint(flat * 2**31), -(2**31), 2**31 - 1).astype("<i4").tobytes()
        elif bits == 24:
            vals = np.clip(np.rint(flat * 2**23), -(2**23), 2**23 - 1).astype(np.int64)
            vals = (vals & 0xFFFFFF).astype(np.uint32)
            raw = b"".join(
                bytes((v & 0xFF, (v >> 8) & 0xFF, (v >> 16) & 0xFF)) for v in vals
            )
        else:
            raise ValueError(bits)
    elif fmt_tag == 3:
        raw = flat.astype("<f4").tobytes()
    else:
        raw = flat.astype("<i2").tobytes()
    block_align = channels * (bits // 8)
    declared = len(raw)
    if truncate_data:
        raw = raw[:-truncate_data]
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + declared,
        b"WAVE",
        b"fmt ",
        16,
        fmt_tag,
        channels,
        rate,
        rate * block_align,
        block_align,
        bits,
        b"data",
        declared,
    )
    return header + raw


@pytest.fixture
def wav_file(tmp_path):
    def _make(name, samples, rate, **kwargs):
        path = tmp_path / name
        path.write_bytes(make_wav_bytes(samples, rate, **kwargs))
        return path

    return _make


def tone(freq, seconds, rate, amplitude=0.5):
    t = np.arange(round(seconds * rate)) / rate
    return amplitude * np.sin(2.0 * np.pi * freq * t)


def signal(samples, rate=16000, source_id="test"):
    return AudioSignal(np.asarray(samples, dtype=np.float64), rate, source_id)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    import re

    reports = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py" in rep.nodeid:
                reports.append((rep.nodeid, outcome == "passed"))
    if not reports:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for nodeid, ok in sorted(reports):
        parts = nodeid.split("::")
        group = re.sub(r"(?<!^)(?=[A-Z])", " ", parts[1].removeprefix("Test")).lower()
        name = parts[2].removeprefix("test_").replace("_", " ")
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {group}: {name}")


def build_fixture_corpus(root, n_recordings=10, seconds_each=10, cfg=None):
    """Deterministic recordings + manifest + content-addressed ASR fixtures.

    Each recording is seeded noise-plus-tone audio. Chunk texts cycle
    through the built-in MT phrase pairs, and the ASR fixture table is
    keyed by the hash of each chunk's post-preprocessing PCM, so the mocks
    reproduce the reference texts verbatim end to end.

    Returns (manifest_path, refs_manifest, asr_fixtures).
    """
    cfg = cfg or PipelineConfig(output_dir=str(root / "out"))
    audio_dir = root / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(2024)
    records = []
    for i in range(n_recordings):
        rec_id = f"rec{i:04d}"
        n = seconds_each * 16000
        x = 0.3 * np.sin(2 * np.pi * (220 + 20 * i) * np.arange(n) / 16000)
        x = x + rng.normal(0, 0.02, size=n)
        path = audio_dir / f"{rec_id}.wav"
        write_wav(signal(np.clip(x, -1, 1), source_id=rec_id), path)
        records.append(
            UtteranceRecord(
                id=rec_id,
                audio_path=str(path),
                dialect_text="placeholder",
                standard_text="placeholder",
            )
        )
    manifest_path = root / "recordings.jsonl"
    save_manifest(CorpusManifest(tuple(records)), manifest_path)

    chunks = _prepare_chunks([(r.id, r.audio_path) for r in records], cfg)
    asr_fixtures = {}
    ref_records = []
    for idx, seg in enumerate(chunks):
        dialect, standard = BUILTIN_MT_PAIRS[idx % len(BUILTIN_MT_PAIRS)]
        asr_fixtures[fnv1a64(encode_pcm16(seg.audio.samples))] = dialect
        ref_records.append(
            UtteranceRecord(
                id=f"{seg.parent_id}:{seg.index_k}",
                audio_path=records[0].audio_path,
                dialect_text=dialect,
                standard_text=standard,
            )
        )
    return manifest_path, CorpusManifest(tuple(ref_records)), asr_fixtures
