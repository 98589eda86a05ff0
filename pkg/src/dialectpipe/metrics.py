"""CER, WER, and corpus-level BLEU with micro-style aggregation.

Error rates are edit operations divided by reference length, reported as
percentages; hypotheses much longer than their reference legitimately
score above 100%. Corpus CER/WER pool edit counts over pooled reference
lengths (micro aggregation) rather than averaging per-utterance rates.
BLEU follows the original corpus-level definition: clipped n-gram
precisions pooled over the corpus, geometric mean, multiplicative brevity
penalty, no smoothing.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DivisionByEmptyReference, EmptyCorpus, LengthMismatch
from .textnorm import collapse_whitespace, grapheme_clusters, nfc, tokenize


@dataclass(frozen=True)
class EditOps:
    """Minimal edit operation counts transforming a reference into a hypothesis."""

    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions


@dataclass(frozen=True)
class MetricReport:
    """Corpus-level scores; bleu_percent is None for ASR-style reports."""

    cer_percent: float
    wer_percent: float
    bleu_percent: float | None
    pair_count: int
    total_ref_chars: int
    total_ref_words: int

    def to_json_obj(self) -> dict:
        obj = {
            "cer_percent": self.cer_percent,
            "wer_percent": self.wer_percent,
            "pair_count": self.pair_count,
            "total_ref_chars": self.total_ref_chars,
            "total_ref_words": self.total_ref_words,
        }
        if self.bleu_percent is not None:
            obj["bleu_percent"] = self.bleu_percent
        return obj


def edit_distance(ref: Sequence, hyp: Sequence) -> EditOps:
    """Unit-cost Levenshtein operations from ``ref`` to ``hyp``.

    Standard DP minimum; among equally minimal op mixes the backtrace
    prefers substitution over deletion over insertion.
    """
    la, lb = len(ref), len(hyp)
    vocab: dict = {}
    a = [vocab.setdefault(u, len(vocab)) for u in ref]
    b = [vocab.setdefault(u, len(vocab)) for u in hyp]

    # dist[i][j] = edits between ref[:i] and hyp[:j]; plain lists beat numpy
    # on the short sequences chunk-level scoring feeds in
    if la * lb <= 1024:
        dist = _dp_lists(a, b)
    else:
        dist = _dp_numpy(a, b)

    subs = dels = ins = 0
    i, j = la, lb
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (a[i - 1] != b[j - 1]):
            if a[i - 1] != b[j - 1]:
                subs += 1
            i -= 1
            j -= 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return EditOps(subs, dels, ins, la)


def _dp_lists(a: list[int], b: list[int]) -> list[list[int]]:
    lb = len(b)
    rows = [list(range(lb + 1))]
    prev = rows[0]
    for i, unit in enumerate(a, start=1):
        cur = [i] + [0] * lb
        for j in range(1, lb + 1):
            cur[j] = min(
                prev[j - 1] + (unit != b[j - 1]), prev[j] + 1, cur[j - 1] + 1
            )
        rows.append(cur)
        prev = cur
    return rows


def _dp_numpy(a: list[int], b: list[int]) -> np.ndarray:
    la, lb = len(a), len(b)
    enc_b = np.asarray(b, dtype=np.int64)
    dist = np.empty((la + 1, lb + 1), dtype=np.int32)
    dist[0, :] = np.arange(lb + 1)
    dist[:, 0] = np.arange(la + 1)
    cols = np.arange(lb, dtype=np.int32)
    for i in range(1, la + 1):
        mismatch = (enc_b != a[i - 1]).astype(np.int32)
        best = np.minimum(dist[i - 1, :-1] + mismatch, dist[i - 1, 1:] + 1)
        # fold in the left-to-right insertion dependency in one pass:
        # dist[i, j] = min over j' <= j of best[j'] + (j - j')
        dist[i, 1:] = np.minimum.accumulate(best - cols) + cols
    return dist


def cer_units(text: str, grapheme: bool = False) -> list[str]:
    """Scoring units for CER: NFC scalars with whitespace runs collapsed.

    With ``grapheme`` set, units are approximate grapheme clusters instead
    of scalar values (useful for Bangla-script analysis).
    """
    normalized = collapse_whitespace(nfc(text))
    return grapheme_clusters(normalized) if grapheme else list(normalized)


def cer(ref: str, hyp: str, grapheme: bool = False) -> float:
    """Character error rate as a percentage; unbounded above 100."""
    r, h = cer_units(ref, grapheme), cer_units(hyp, grapheme)
    if not r:
        raise DivisionByEmptyReference("reference is empty after normalization")
    return 100.0 * edit_distance(r, h).total / len(r)


def wer(ref: str, hyp: str) -> float:
    """Word error rate as a percentage over whitespace tokens."""
    r, h = tokenize(ref), tokenize(hyp)
    if not r:
        raise DivisionByEmptyReference("reference has no tokens")
    return 100.0 * edit_distance(r, h).total / len(r)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    refs: Sequence[Sequence[str]],
    hyps: Sequence[Sequence[str]],
    max_n: int = 4,
) -> float:
    """Corpus-level BLEU (single reference per hypothesis), in percent.

    Clipped n-gram matches and candidate counts pool over the whole corpus;
    the score is the geometric mean of the pooled precisions times the
    brevity penalty exp(1 - r/c) when c <= r. A pooled precision of zero
    zeroes the score (no smoothing). Orders with no candidate n-grams
    anywhere in the corpus (every hypothesis shorter than n) drop out of
    the geometric mean, so an identity corpus scores 100 regardless of
    sentence length.
    """
    if len(refs) != len(hyps):
        raise LengthMismatch(f"{len(refs)} references vs {len(hyps)} hypotheses")
    if not refs:
        raise EmptyCorpus("no sentence pairs")
    matches = [0] * max_n
    candidates = [0] * max_n
    ref_len = 0
    hyp_len = 0
    for ref, hyp in zip(refs, hyps):
        ref = list(ref)
        hyp = list(hyp)
        ref_len += len(ref)
        hyp_len += len(hyp)
        for n in range(1, max_n + 1):
            if len(hyp) < n:
                break
            hyp_counts = _ngrams(hyp, n)
            ref_counts = _ngrams(ref, n)
            matches[n - 1] += sum(
                min(count, ref_counts[gram]) for gram, count in hyp_counts.items()
            )
            candidates[n - 1] += len(hyp) - n + 1
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    orders = 0
    for match, cand in zip(matches, candidates):
        if cand == 0:
            continue
        if match == 0:
            return 0.0
        log_sum += math.log(match / cand)
        orders += 1
    if orders == 0:
        return 0.0
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_sum / orders)


def sentence_bleu(ref: Sequence[str], hyp: Sequence[str], max_n: int = 4) -> float:
    """Diagnostic per-sentence BLEU with epsilon smoothing on zero counts."""
    eps = 1e-9
    hyp = list(hyp)
    ref = list(ref)
    if not hyp:
        return 0.0
    log_sum = 0.0
    orders = 0
    for n in range(1, max_n + 1):
        cand = len(hyp) - n + 1
        if cand <= 0:
            continue
        ref_counts = _ngrams(ref, n)
        match = sum(
            min(count, ref_counts[gram]) for gram, count in _ngrams(hyp, n).items()
        )
        log_sum += math.log(max(match, eps) / cand)
        orders += 1
    if orders == 0:
        return 0.0
    bp = 1.0 if len(hyp) > len(ref) else math.exp(1.0 - len(ref) / len(hyp))
    return 100.0 * bp * math.exp(log_sum / orders)


def evaluate_corpus(
    pairs: Sequence[tuple[str, str]],
    task: str,
    grapheme: bool = False,
) -> MetricReport:
    """Micro-aggregated CER/WER over (reference, hypothesis) pairs.

    Pooled edit counts divide by pooled reference lengths. BLEU is computed
    corpus-level for the MT task only; ASR reports omit it.
    """
    if task not in ("asr", "mt"):
        raise ValueError(f"task must be 'asr' or 'mt', got {task!r}")
    if not pairs:
        raise EmptyCorpus("no pairs to evaluate")
    char_edits = char_total = 0
    word_edits = word_total = 0
    for ref, hyp in pairs:
        r_chars = cer_units(ref, grapheme)
        h_chars = cer_units(hyp, grapheme)
        char_edits += edit_distance(r_chars, h_chars).total
        char_total += len(r_chars)
        r_words, h_words = tokenize(ref), tokenize(hyp)
        word_edits += edit_distance(r_words, h_words).total
        word_total += len(r_words)
    if char_total == 0 or word_total == 0:
        raise DivisionByEmptyReference("all references empty after normalization")
    bleu_percent = None
    if task == "mt":
        bleu_percent = bleu(
            [tokenize(ref) for ref, _ in pairs], [tokenize(hyp) for _, hyp in pairs]
        )
    return MetricReport(
        cer_percent=100.0 * char_edits / char_total,
        wer_percent=100.0 * word_edits / word_total,
        bleu_percent=bleu_percent,
        pair_count=len(pairs),
        total_ref_chars=char_total,
        total_ref_words=word_total,
    )
