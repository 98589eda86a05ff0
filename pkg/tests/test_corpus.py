import json

import numpy as np
import pytest

from dialectpipe.audio_io import write_wav
from dialectpipe.corpus import (
    CorpusManifest,
    UtteranceRecord,
    assign_splits,
    compute_stats,
    load_manifest,
    load_split,
    save_manifest,
    save_split,
)
from dialectpipe.errors import InsufficientRecords, SchemaViolation

from conftest import signal


def make_records(n, prefix="utt"):
    return tuple(
        UtteranceRecord(
            id=f"{prefix}{i:04d}",
            audio_path=f"audio/{prefix}{i:04d}.wav",
            dialect_text=f"dialect line {i}",
            standard_text=f"standard line {i}",
        )
        for i in range(n)
    )


class TestManifestIo:
    def test_empty_file_loads_empty_manifest(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert load_manifest(path).records == ()

    def test_round_trip_field_for_field(self, tmp_path):
        records = (
            UtteranceRecord(
                id="a",
                audio_path="x.wav",
                dialect_text="Anne konai jan",
                standard_text="Apne kothay jan",
                speaker={"age_band": "18-28", "gender": "female", "region": "Sadar"},
            ),
            UtteranceRecord(
                id="b",
                audio_path="y.wav",
                dialect_text="d",
                standard_text="s",
                explicit_chunks=(("d1", "s1"), ("d2", "s2")),
            ),
            UtteranceRecord(id="c", audio_path="z.wav", dialect_text="dd", standard_text="ss"),
        )
        manifest = CorpusManifest(records)
        path = tmp_path / "m.jsonl"
        save_manifest(manifest, path)
        assert load_manifest(path).records == records

    def test_duplicate_id_names_both_lines(self, tmp_path):
        rows = [
            {"id": f"u{i}", "audio": "a.wav", "dialect_text": "d", "standard_text": "s"}
            for i in range(8)
        ]
        rows[6]["id"] = rows[2]["id"]  # duplicate on lines 3 and 7
        path = tmp_path / "dup.jsonl"
        path.write_text("".join(json.dumps(r) + "\n" for r in rows))
        with pytest.raises(SchemaViolation) as err:
            load_manifest(path)
        assert "u2" in str(err.value)
        assert "3" in str(err.value) and "7" in str(err.value)

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "audio": "x.wav", "dialect_text": "d"}\n')
        with pytest.raises(SchemaViolation) as err:
            load_manifest(path)
        assert "standard_text" in str(err.value)

    def test_empty_text_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(
            '{"id": "a", "audio": "x.wav", "dialect_text": "", "standard_text": "s"}\n'
        )
        with pytest.raises(SchemaViolation):
            load_manifest(path)

    def test_non_ascii_preserved(self, tmp_path):
        rec = UtteranceRecord(
            id="bn", audio_path="x.wav",
            dialect_text="আমি ভালো",
            standard_text="আমি ভালো আছি",
        )
        path = tmp_path / "bn.jsonl"
        save_manifest(CorpusManifest((rec,)), path)
        assert "\\u" not in path.read_text(encoding="utf-8")
        assert load_manifest(path).records[0] == rec


class TestStats:
    def test_hand_counted_characters_and_words(self, tmp_path):
        wav = tmp_path / "a.wav"
        write_wav(signal(np.zeros(16000)), wav)
        rec = UtteranceRecord(
            id="a", audio_path=str(wav), dialect_text="aba", standard_text="x"
        )
        stats = compute_stats(CorpusManifest((rec,)))
        assert stats.unique_characters == 2
        assert stats.unique_words == 1
        assert stats.record_count == 1
        assert stats.total_duration == pytest.approx(1.0)

    def test_words_across_records(self, tmp_path):
        wav = tmp_path / "a.wav"
        write_wav(signal(np.zeros(16000)), wav)
        records = (
            UtteranceRecord(id="1", audio_path=str(wav), dialect_text="ab cd", standard_text="x"),
            UtteranceRecord(id="2", audio_path=str(wav), dialect_text="cd ef", standard_text="x"),
        )
        stats = compute_stats(CorpusManifest(records))
        assert stats.unique_words == 3

    def test_missing_audio_listed_stats_still_returned(self, tmp_path):
        rec = UtteranceRecord(
            id="gone", audio_path=str(tmp_path / "nope.wav"),
            dialect_text="ab", standard_text="x",
        )
        stats = compute_stats(CorpusManifest((rec,)))
        assert stats.missing_audio == ("gone",)
        assert stats.unique_characters == 2
        assert stats.total_duration == 0.0

    def test_chunk_count_sums_floor_per_record(self, tmp_path):
        paths = []
        for i, seconds in enumerate((12, 5, 4)):  # 2 + 1 + 0 chunks
            wav = tmp_path / f"r{i}.wav"
            write_wav(signal(np.zeros(seconds * 16000)), wav)
            paths.append(wav)
        records = tuple(
            UtteranceRecord(id=f"r{i}", audio_path=str(p), dialect_text="d", standard_text="s")
            for i, p in enumerate(paths)
        )
        stats = compute_stats(CorpusManifest(records))
        assert stats.chunk_count == 3

    def test_stats_monotone_under_extension(self, tmp_path):
        wav = tmp_path / "a.wav"
        write_wav(signal(np.zeros(16000)), wav)
        base = [
            UtteranceRecord(id=f"u{i}", audio_path=str(wav),
                            dialect_text=f"word{i} shared", standard_text="x")
            for i in range(5)
        ]
        prev = compute_stats(CorpusManifest(tuple(base)))
        extended = base + [
            UtteranceRecord(id="new", audio_path=str(wav),
                            dialect_text="totally fresh words", standard_text="x")
        ]
        cur = compute_stats(CorpusManifest(tuple(extended)))
        assert cur.unique_characters >= prev.unique_characters
        assert cur.unique_words >= prev.unique_words


class TestSplits:
    def test_exact_sizes(self):
        manifest = CorpusManifest(make_records(7200))
        out = assign_splits(manifest, {"train": 6270, "val": 810, "test": 120}, seed=7)
        sizes = {name: 0 for name in ("train", "val", "test")}
        for value in out.split.values():
            sizes[value] += 1
        assert sizes == {"train": 6270, "val": 810, "test": 120}

    def test_deterministic_per_seed(self):
        manifest = CorpusManifest(make_records(500))
        counts = {"train": 300, "val": 100, "test": 50}
        a = assign_splits(manifest, counts, seed=42)
        b = assign_splits(manifest, counts, seed=42)
        assert a.split == b.split

    def test_different_seeds_differ(self):
        manifest = CorpusManifest(make_records(500))
        counts = {"train": 300, "val": 100, "test": 50}
        a = assign_splits(manifest, counts, seed=1)
        b = assign_splits(manifest, counts, seed=2)
        assert a.split != b.split

    def test_partition_disjoint(self):
        manifest = CorpusManifest(make_records(100))
        out = assign_splits(manifest, {"train": 60, "val": 30, "test": 10}, seed=0)
        assert len(out.split) == 100  # every id assigned exactly once

    def test_zero_counts_leave_all_unassigned(self):
        manifest = CorpusManifest(make_records(10))
        out = assign_splits(manifest, {"train": 0, "val": 0, "test": 0}, seed=0)
        assert out.split == {}

    def test_insufficient_records(self):
        manifest = CorpusManifest(make_records(100))
        with pytest.raises(InsufficientRecords):
            assign_splits(manifest, {"train": 90, "val": 20, "test": 0}, seed=0)

    def test_sidecar_round_trip(self, tmp_path):
        manifest = assign_splits(
            CorpusManifest(make_records(20)), {"train": 10, "val": 5, "test": 5}, seed=3
        )
        path = tmp_path / "split.jsonl"
        save_split(manifest, path)
        bare = CorpusManifest(manifest.records)
        loaded = load_split(bare, path)
        assert loaded.split == manifest.split

    def test_split_with_stray_id_rejected(self):
        with pytest.raises(SchemaViolation):
            CorpusManifest(make_records(3), split={"ghost": "train"})
