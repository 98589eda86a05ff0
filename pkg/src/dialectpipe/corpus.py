"""Corpus manifests, dataset statistics, and split assignment.

Manifests are JSON Lines (UTF-8, one record per line) so 10-hour corpora
stream and diff cleanly. Split assignments live in a sidecar JSONL rather
than inside the manifest, keeping the data records immutable.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

from .audio_io import wav_info
from .errors import DialectPipeError, InsufficientRecords, IoFailure, SchemaViolation
from .segmenter import DEFAULT_WINDOW_S, window_samples
from .textnorm import nfc

SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class UtteranceRecord:
    """One corpus row: audio reference plus dialect and standard texts."""

    id: str
    audio_path: str
    dialect_text: str
    standard_text: str
    speaker: dict | None = None  # {"age_band", "gender", "region"}
    explicit_chunks: tuple[tuple[str, str], ...] | None = None

    def __post_init__(self):
        if not self.id:
            raise SchemaViolation("record id must be non-empty")
        if not self.dialect_text or not self.standard_text:
            raise SchemaViolation(f"record {self.id!r}: both texts must be non-empty")
        if self.explicit_chunks is not None and len(self.explicit_chunks) == 0:
            raise SchemaViolation(f"record {self.id!r}: explicit chunks must be non-empty")


@dataclass(frozen=True)
class CorpusManifest:
    records: tuple[UtteranceRecord, ...]
    split: dict[str, str] | None = None  # id -> train|val|test

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        ids = {r.id for r in self.records}
        if len(ids) != len(self.records):
            raise SchemaViolation("duplicate record ids in manifest")
        if self.split is not None:
            stray = set(self.split) - ids
            if stray:
                raise SchemaViolation(f"split names unknown ids: {sorted(stray)[:5]}")
            bad = {v for v in self.split.values()} - set(SPLIT_NAMES)
            if bad:
                raise SchemaViolation(f"invalid split labels: {sorted(bad)}")

    def by_id(self) -> dict[str, UtteranceRecord]:
        return {r.id: r for r in self.records}


@dataclass(frozen=True)
class CorpusStats:
    unique_characters: int
    unique_words: int
    total_duration: float
    record_count: int
    chunk_count: int
    missing_audio: tuple[str, ...] = ()


def _record_to_obj(rec: UtteranceRecord) -> dict:
    obj = {
        "id": rec.id,
        "audio": rec.audio_path,
        "dialect_text": rec.dialect_text,
        "standard_text": rec.standard_text,
    }
    if rec.speaker is not None:
        obj["speaker"] = rec.speaker
    if rec.explicit_chunks is not None:
        obj["chunks"] = [{"d": d, "s": s} for d, s in rec.explicit_chunks]
    return obj


def _record_from_obj(obj: dict, lineno: int) -> UtteranceRecord:
    for key in ("id", "audio", "dialect_text", "standard_text"):
        if key not in obj:
            raise SchemaViolation(f"line {lineno}: missing required field {key!r}")
    chunks = None
    if "chunks" in obj and obj["chunks"] is not None:
        try:
            chunks = tuple((c["d"], c["s"]) for c in obj["chunks"])
        except (KeyError, TypeError) as exc:
            raise SchemaViolation(f"line {lineno}: malformed chunks entry") from exc
    return UtteranceRecord(
        id=obj["id"],
        audio_path=obj["audio"],
        dialect_text=obj["dialect_text"],
        standard_text=obj["standard_text"],
        speaker=obj.get("speaker"),
        explicit_chunks=chunks,
    )


def load_manifest(path) -> CorpusManifest:
    """Parse a JSONL manifest; duplicate ids name both offending lines."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    records = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"line {lineno}: invalid JSON: {exc}") from exc
        try:
            rec = _record_from_obj(obj, lineno)
        except SchemaViolation:
            raise
        except DialectPipeError as exc:
            raise SchemaViolation(f"line {lineno}: {exc}") from exc
        if rec.id in seen:
            raise SchemaViolation(
                f"duplicate id {rec.id!r} on lines {seen[rec.id]} and {lineno}"
            )
        seen[rec.id] = lineno
        records.append(rec)
    return CorpusManifest(tuple(records))


def save_manifest(manifest: CorpusManifest, path) -> None:
    """Write records as JSONL atomically; load(save(m)) == m field-for-field."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            for rec in manifest.records:
                fh.write(json.dumps(_record_to_obj(rec), ensure_ascii=False) + "\n")
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def save_split(manifest: CorpusManifest, path) -> None:
    """Write the split sidecar: one {"id", "split"} object per assigned id."""
    if manifest.split is None:
        raise SchemaViolation("manifest carries no split assignment")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            for rec in manifest.records:
                if rec.id in manifest.split:
                    row = {"id": rec.id, "split": manifest.split[rec.id]}
                    fh.write(json.dumps(row, ensure_ascii=False) + "\n")
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_split(manifest: CorpusManifest, path) -> CorpusManifest:
    """Attach a split sidecar to a manifest."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    split: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        if "id" not in obj or "split" not in obj:
            raise SchemaViolation(f"line {lineno}: sidecar rows need id and split")
        split[obj["id"]] = obj["split"]
    return replace(manifest, split=split)


def compute_stats(
    manifest: CorpusManifest, window_s: float = DEFAULT_WINDOW_S
) -> CorpusStats:
    """Corpus statistics over dialect texts and audio headers.

    Character counts are over NFC-normalized dialect texts with whitespace
    excluded; word counts over whitespace tokens. Records whose audio
    cannot be read are listed in ``missing_audio`` and contribute zero
    duration; text statistics still cover them.
    """
    chars: set[str] = set()
    words: set[str] = set()
    total = Fraction(0)
    chunks = 0
    missing: list[str] = []
    for rec in manifest.records:
        text = nfc(rec.dialect_text)
        chars.update(c for c in text if not c.isspace())
        words.update(text.split())
        try:
            frames, rate = wav_info(rec.audio_path)
        except DialectPipeError:
            missing.append(rec.id)
            continue
        total += Fraction(frames, rate)
        chunks += frames // window_samples(window_s, rate)
    return CorpusStats(
        unique_characters=len(chars),
        unique_words=len(words),
        total_duration=float(total),
        record_count=len(manifest.records),
        chunk_count=chunks,
        missing_audio=tuple(missing),
    )


def assign_splits(
    manifest: CorpusManifest, counts: dict[str, int], seed: int
) -> CorpusManifest:
    """Deterministic seeded shuffle, then contiguous train/val/test blocks.

    The same (manifest, counts, seed) always produces the same assignment.
    Ids beyond the requested counts stay unassigned.
    """
    want = {name: int(counts.get(name, 0)) for name in SPLIT_NAMES}
    if any(v < 0 for v in want.values()):
        raise ValueError(f"negative split count in {counts}")
    total = sum(want.values())
    if total > len(manifest.records):
        raise InsufficientRecords(
            f"requested {total} assignments but manifest has "
            f"{len(manifest.records)} records"
        )
    ids = [r.id for r in manifest.records]
    random.Random(seed).shuffle(ids)
    split: dict[str, str] = {}
    cursor = 0
    for name in SPLIT_NAMES:
        for rec_id in ids[cursor : cursor + want[name]]:
            split[rec_id] = name
        cursor += want[name]
    return replace(manifest, split=split)
