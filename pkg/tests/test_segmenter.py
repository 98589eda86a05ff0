import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialectpipe.corpus import UtteranceRecord
from dialectpipe.errors import AnnotationMismatch, NotStandardized, ZeroChunks
from dialectpipe.segmenter import (
    align,
    iter_split_audio,
    segment_count,
    split_audio,
    split_text,
)

from conftest import signal


def boundary_oracle(total, n):
    """Direct evaluation of the chunk boundary formula."""
    bounds = [(k * total) // n for k in range(n + 1)]
    return [bounds[k + 1] - bounds[k] for k in range(n)]


class TestSegmentCount:
    def test_exact_multiple(self):
        assert segment_count(10) == 2

    def test_floor_with_remainder(self):
        assert segment_count(123) == 24

    def test_ten_hours_gives_7200(self):
        assert segment_count(36000) == 7200

    def test_zero_duration(self):
        assert segment_count(0) == 0

    def test_float_boundary_is_sample_exact(self):
        # 4.9999999999s of samples rounds to 80000 samples = exactly one window
        assert segment_count(80000 / 16000) == 1
        assert segment_count(79999 / 16000) == 0


class TestSplitAudio:
    def test_twelve_seconds_two_segments(self):
        sig = signal(np.arange(12 * 16000, dtype=np.float64) / (12 * 16000))
        segs = split_audio(sig)
        assert len(segs) == 2
        assert all(len(s.audio) == 80000 for s in segs)
        assert [s.index_k for s in segs] == [1, 2]
        joined = np.concatenate([s.audio.samples for s in segs])
        assert np.array_equal(joined, sig.samples[: 2 * 80000])

    def test_exact_window_is_identity(self):
        sig = signal(np.random.default_rng(1).uniform(-1, 1, 80000))
        segs = split_audio(sig)
        assert len(segs) == 1
        assert np.array_equal(segs[0].audio.samples, sig.samples)

    def test_sub_window_yields_empty_with_warning(self, caplog):
        sig = signal(np.zeros(78400), source_id="short")  # 4.9 s
        with caplog.at_level(logging.WARNING):
            segs = split_audio(sig)
        assert segs == []
        assert any("short" in rec.message for rec in caplog.records)

    def test_requires_standard_rate(self):
        with pytest.raises(NotStandardized):
            split_audio(signal(np.zeros(100000), rate=44100))

    def test_count_law_matches_duration(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(0, 30 * 16000))
            sig = signal(np.zeros(n))
            assert len(split_audio(sig)) == segment_count(sig.duration_seconds)


class TestStreamingSplit:
    def test_matches_in_memory_version(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-1, 1, size=17 * 16000 + 4321)
        whole = split_audio(signal(x, source_id="r"))
        blocks = np.array_split(x, 13)
        streamed = list(iter_split_audio(blocks, "r"))
        assert len(streamed) == len(whole)
        for a, b in zip(streamed, whole):
            assert a.index_k == b.index_k
            assert np.array_equal(a.audio.samples, b.audio.samples)

    def test_constant_memory_block_sizes(self):
        blocks = [np.zeros(1000)] * 500  # 500k samples -> 6 windows
        segs = list(iter_split_audio(iter(blocks), "z"))
        assert len(segs) == 6


class TestSplitText:
    def test_even_split(self):
        chunks = split_text(list("abcdefghij"), 2)
        assert [len(c) for c in chunks] == [5, 5]

    def test_seven_tokens_three_chunks(self):
        # boundary formula: bounds 0,2,4,7 -> sizes 2,2,3
        chunks = split_text([f"t{i}" for i in range(7)], 3)
        assert [len(c) for c in chunks] == [2, 2, 3]
        assert [len(c) for c in chunks] == boundary_oracle(7, 3)

    def test_fewer_tokens_than_chunks(self):
        chunks = split_text(["a", "b"], 5)
        assert [len(c) for c in chunks] == boundary_oracle(2, 5)
        assert sum(chunks, ()) == ("a", "b")

    def test_zero_chunks(self):
        with pytest.raises(ZeroChunks):
            split_text(["a"], 0)

    @given(st.integers(min_value=0, max_value=300), st.integers(min_value=1, max_value=40))
    @settings(max_examples=300, deadline=None)
    def test_conservation_property(self, total, n):
        tokens = [f"w{i}" for i in range(total)]
        chunks = split_text(tokens, n)
        assert len(chunks) == n
        assert list(sum(chunks, ())) == tokens
        assert [len(c) for c in chunks] == boundary_oracle(total, n)


class TestAlign:
    def _record(self, rec_id="rec", dialect="one two three four five six "
                "seven eight nine ten", standard="uno dos tres cuatro cinco seis "
                "siete ocho nueve diez", chunks=None):
        return UtteranceRecord(
            id=rec_id,
            audio_path="unused.wav",
            dialect_text=dialect,
            standard_text=standard,
            explicit_chunks=chunks,
        )

    def test_even_alignment(self):
        sig = signal(np.zeros(10 * 16000), source_id="rec")
        aligned = align(self._record(), sig=sig)
        assert len(aligned) == 2
        for k, chunk in enumerate(aligned, start=1):
            assert chunk.segment.index_k == k == chunk.text.index_k
            assert chunk.segment.parent_id == "rec" == chunk.text.parent_id
            assert len(chunk.text.dialect_text) == 5
            assert len(chunk.text.standard_text) == 5

    def test_annotations_take_precedence(self):
        chunks = (("a b", "x y"), ("c", "z"), ("d e f", "w v u"))
        sig = signal(np.zeros(15 * 16000), source_id="rec")
        aligned = align(self._record(chunks=chunks), sig=sig)
        assert len(aligned) == 3
        assert aligned[1].text.dialect_text == ("c",)
        assert aligned[2].text.standard_text == ("w", "v", "u")

    def test_annotation_count_mismatch(self):
        chunks = (("a", "x"), ("b", "y"))
        sig = signal(np.zeros(15 * 16000), source_id="rec")
        with pytest.raises(AnnotationMismatch):
            align(self._record(chunks=chunks), sig=sig)

    def test_no_tokens_discarded_when_audio_truncated(self):
        # 11s audio keeps 2 windows; all 10 tokens still distribute over them
        sig = signal(np.zeros(11 * 16000), source_id="rec")
        aligned = align(self._record(), sig=sig)
        total = sum(len(c.text.dialect_text) for c in aligned)
        assert total == 10

    def test_alignment_totality_shared_ids(self):
        sig = signal(np.zeros(20 * 16000), source_id="other-name")
        aligned = align(self._record(rec_id="canonical"), sig=sig)
        assert all(
            c.segment.parent_id == c.text.parent_id == "canonical" for c in aligned
        )
