"""Text normalization shared by the segmenter, corpus stats, and metrics.

One tokenization rule everywhere: NFC-normalize, then split on Unicode
whitespace. Chunked texts and scoring references must agree on it, or
segmentation artifacts would show up as word errors.
"""

from __future__ import annotations

import unicodedata


def nfc(text: str) -> str:
    """Canonical composition; Bangla vowel signs count the same either way."""
    return unicodedata.normalize("NFC", text)


def tokenize(text: str) -> list[str]:
    """Maximal runs of non-whitespace scalar values, after NFC."""
    return nfc(text).split()


def collapse_whitespace(text: str) -> str:
    """Strip and collapse whitespace runs to a single space."""
    return " ".join(text.split())


# Canonical combining class of Indic viramas (hasanta); a virama binds the
# following letter into the same cluster (conjunct).
_VIRAMA_CCC = 9

_JOINERS = {"‌", "‍"}  # ZWNJ, ZWJ


def grapheme_clusters(text: str) -> list[str]:
    """Approximate extended grapheme clusters, tuned for Indic scripts.

    A cluster is a base scalar plus any following combining marks (Mn/Mc/Me),
    ZWJ/ZWNJ joiners, and virama-joined conjunct consonants. This is not a
    full UAX #29 segmenter (no emoji or Hangul handling) but it groups
    Bangla consonant clusters and vowel signs the way a script reader would.
    """
    clusters: list[str] = []
    current = ""
    prev = ""
    for ch in text:
        if not current:
            current = ch
        elif (
            unicodedata.category(ch).startswith("M")
            or ch in _JOINERS
            or prev in _JOINERS
            or unicodedata.combining(prev) == _VIRAMA_CCC
        ):
            current += ch
        else:
            clusters.append(current)
            current = ch
        prev = ch
    if current:
        clusters.append(current)
    return clusters
