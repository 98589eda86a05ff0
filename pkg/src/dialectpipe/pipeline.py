"""End-to-end orchestration: denoise -> segment -> ASR -> MT -> TTS.

Chunks are processed in a worker pool but merged in deterministic
(parent_id, index_k) order, so results are byte-identical regardless of
worker count. A failing chunk skips its own downstream stages and becomes
a failure row; it never aborts the run.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import AudioSignal, TARGET_RATE, read_wav, standardize, write_wav
from .corpus import CorpusManifest, load_manifest
from .denoise import GateParams, denoise
from .errors import (
    AllChunksFailed,
    DialectPipeError,
    MissingReference,
    NoBackends,
    TooShort,
    Unreachable,
)
from .metrics import MetricReport, evaluate_corpus
from .mocks import load_asr_fixtures, load_mt_dictionary, mock_backends
from .protocol import StageRequest, audio_to_b64, b64_to_audio, call_stage, check_health
from .segmenter import DEFAULT_WINDOW_S, Segment, split_audio

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    window_s: float = DEFAULT_WINDOW_S
    denoise_enabled: bool = True
    gate: GateParams = field(default_factory=GateParams)
    endpoints: dict[str, str] | None = None  # stage -> base URL
    mock_dir: str | None = None  # directory with asr_fixtures.json / mt_dict.json
    backends: dict | None = None  # explicit stage -> callable; wins over the rest
    parallelism: int = max(1, os.cpu_count() or 1)
    output_dir: str = "out"
    join_text_before_tts: bool = False
    timeout: float = 60.0
    retries: int = 2
    max_inflight: int = 4


@dataclass(frozen=True)
class ChunkRow:
    id: str
    dialect_text: str
    standard_text: str


@dataclass(frozen=True)
class ChunkFailure:
    id: str
    stage: str
    error: str


@dataclass(frozen=True)
class PipelineResult:
    rows: tuple[ChunkRow, ...]
    failures: tuple[ChunkFailure, ...]
    output_audio: dict[str, Path]  # recording id -> standardized-speech WAV
    results_path: Path | None
    failures_path: Path | None
    chunk_count: int


@dataclass(frozen=True)
class EvaluationReports:
    asr_report: MetricReport
    mt_report: MetricReport


def _http_backend(endpoint: str, cfg: PipelineConfig):
    def call(req: StageRequest):
        return call_stage(
            endpoint,
            req,
            timeout=cfg.timeout,
            retries=cfg.retries,
            max_inflight=cfg.max_inflight,
        )

    return call


def resolve_backends(cfg: PipelineConfig) -> dict:
    """Stage callables from explicit backends, endpoints, or mock fixtures."""
    if cfg.backends is not None:
        return cfg.backends
    if cfg.endpoints is not None:
        missing = [s for s in ("asr", "mt", "tts") if s not in cfg.endpoints]
        if missing:
            raise NoBackends(f"no endpoint configured for stages: {missing}")
        for url in sorted(set(cfg.endpoints.values())):
            if not check_health(url, timeout=cfg.timeout):
                raise Unreachable(f"health check failed for {url}")
        return {stage: _http_backend(url, cfg) for stage, url in cfg.endpoints.items()}
    if cfg.mock_dir is not None:
        mock_dir = Path(cfg.mock_dir)
        fixtures_path = mock_dir / "asr_fixtures.json"
        dict_path = mock_dir / "mt_dict.json"
        fixtures = load_asr_fixtures(fixtures_path) if fixtures_path.exists() else {}
        dicts = [load_mt_dictionary(dict_path)] if dict_path.exists() else []
        return mock_backends(fixtures, dicts)
    raise NoBackends("configure endpoints, a mock directory, or explicit backends")


def _load_recordings(input_path) -> list[tuple[str, str]]:
    path = Path(input_path)
    if path.suffix == ".jsonl":
        manifest = load_manifest(path)
        return [(rec.id, rec.audio_path) for rec in manifest.records]
    return [(path.stem, str(path))]


def _prepare_chunks(
    recordings: list[tuple[str, str]], cfg: PipelineConfig
) -> list[Segment]:
    chunks: list[Segment] = []
    for rec_id, audio_path in recordings:
        sig = standardize(read_wav(audio_path))
        sig = AudioSignal(sig.samples, sig.sample_rate, rec_id)
        if cfg.denoise_enabled:
            try:
                sig = denoise(sig, cfg.gate)
            except TooShort:
                log.warning("recording %r too short to denoise; left as is", rec_id)
        chunks.extend(split_audio(sig, cfg.window_s))
    return chunks


def _chunk_id(seg: Segment) -> str:
    return f"{seg.parent_id}:{seg.index_k}"


def _run_chunk(seg: Segment, backends: dict, with_tts: bool):
    """ASR -> MT (-> TTS) for one chunk; returns (row, tts_samples, failure)."""
    chunk_id = _chunk_id(seg)
    try:
        asr_resp = backends["asr"](
            StageRequest(
                stage="asr",
                id=chunk_id,
                sample_rate=seg.audio.sample_rate,
                audio_b64=audio_to_b64(seg.audio.samples),
            )
        )
    except DialectPipeError as exc:
        return None, None, ChunkFailure(chunk_id, "asr", str(exc))
    try:
        mt_resp = backends["mt"](StageRequest(stage="mt", id=chunk_id, text=asr_resp.text))
    except DialectPipeError as exc:
        return None, None, ChunkFailure(chunk_id, "mt", str(exc))
    row = ChunkRow(chunk_id, asr_resp.text or "", mt_resp.text or "")
    if not with_tts:
        return row, None, None
    try:
        tts_resp = backends["tts"](
            StageRequest(
                stage="tts", id=chunk_id, text=mt_resp.text, sample_rate=TARGET_RATE
            )
        )
    except DialectPipeError as exc:
        return None, None, ChunkFailure(chunk_id, "tts", str(exc))
    return row, b64_to_audio(tts_resp.audio_b64), None


def _write_jsonl(path: Path, objs) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    os.replace(tmp, path)


def run(input_path, cfg: PipelineConfig) -> PipelineResult:
    """Run the full pipeline over an audio file or a JSONL manifest.

    Per recording: standardize, denoise, split into fixed windows. Per
    chunk: ASR, MT, TTS, with per-chunk TTS outputs concatenated in index
    order into <recording>.standard.wav. All chunk texts land in
    results.jsonl, failures in failures.jsonl; both are written even when
    :class:`AllChunksFailed` is raised at the end.
    """
    backends = resolve_backends(cfg)
    recordings = _load_recordings(input_path)
    chunks = _prepare_chunks(recordings, cfg)
    chunks.sort(key=lambda seg: (seg.parent_id, seg.index_k))
    if not chunks:
        log.warning("input %s produced no chunks; nothing to do", input_path)

    with_tts = not cfg.join_text_before_tts
    jobs = max(1, cfg.parallelism)
    if len(chunks) and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(
                pool.map(lambda seg: _run_chunk(seg, backends, with_tts), chunks)
            )
    else:
        outcomes = [_run_chunk(seg, backends, with_tts) for seg in chunks]

    rows: list[ChunkRow] = []
    failures: list[ChunkFailure] = []
    audio_parts: dict[str, list[np.ndarray]] = {}
    rec_rows: dict[str, list[ChunkRow]] = {}
    for seg, (row, tts_samples, failure) in zip(chunks, outcomes):
        if failure is not None:
            failures.append(failure)
            continue
        rows.append(row)
        rec_rows.setdefault(seg.parent_id, []).append(row)
        if tts_samples is not None:
            audio_parts.setdefault(seg.parent_id, []).append(tts_samples)

    if cfg.join_text_before_tts:
        # Alternative mode: synthesize each recording's joined standard text once.
        for rec_id, rec_row_list in sorted(rec_rows.items()):
            joined = " ".join(r.standard_text for r in rec_row_list).strip()
            if not joined:
                continue
            try:
                resp = backends["tts"](
                    StageRequest(
                        stage="tts",
                        id=f"{rec_id}:joined",
                        text=joined,
                        sample_rate=TARGET_RATE,
                    )
                )
            except DialectPipeError as exc:
                failures.append(ChunkFailure(f"{rec_id}:joined", "tts", str(exc)))
                continue
            audio_parts[rec_id] = [b64_to_audio(resp.audio_b64)]

    output_dir = Path(cfg.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    output_audio: dict[str, Path] = {}
    for rec_id in sorted(audio_parts):
        wav_path = output_dir / f"{rec_id}.standard.wav"
        write_wav(
            AudioSignal(np.concatenate(audio_parts[rec_id]), TARGET_RATE, rec_id),
            wav_path,
        )
        output_audio[rec_id] = wav_path

    results_path = output_dir / "results.jsonl"
    failures_path = output_dir / "failures.jsonl"
    _write_jsonl(
        results_path,
        (
            {"id": r.id, "dialect_text": r.dialect_text, "standard_text": r.standard_text}
            for r in rows
        ),
    )
    _write_jsonl(
        failures_path,
        ({"id": f.id, "stage": f.stage, "error": f.error} for f in failures),
    )

    result = PipelineResult(
        rows=tuple(rows),
        failures=tuple(failures),
        output_audio=output_audio,
        results_path=results_path,
        failures_path=failures_path,
        chunk_count=len(chunks),
    )
    if chunks and not rows:
        raise AllChunksFailed(
            f"all {len(chunks)} chunks failed; partial outputs in {output_dir}"
        )
    return result


def evaluate(result: PipelineResult, refs: CorpusManifest) -> EvaluationReports:
    """Score pipeline rows against chunk-level reference texts.

    The reference manifest must key records by the same "parent:k" chunk
    ids the pipeline emits. ASR rows score CER+WER against dialect texts;
    MT rows score CER+WER+BLEU against standard texts, mirroring how the
    two stages are reported.
    """
    by_id = refs.by_id()
    missing = [row.id for row in result.rows if row.id not in by_id]
    if missing:
        raise MissingReference(missing)
    asr_pairs = [(by_id[row.id].dialect_text, row.dialect_text) for row in result.rows]
    mt_pairs = [(by_id[row.id].standard_text, row.standard_text) for row in result.rows]
    return EvaluationReports(
        asr_report=evaluate_corpus(asr_pairs, task="asr"),
        mt_report=evaluate_corpus(mt_pairs, task="mt"),
    )
