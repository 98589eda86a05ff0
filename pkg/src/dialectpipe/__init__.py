"""Dialect-speech standardization toolkit.

Takes raw dialect recordings from ingest to a standardized-speech output:
WAV standardization (16 kHz / mono / 16-bit), spectral-gating denoise,
fixed 5-second segmentation with aligned text chunks, JSONL corpus
management, CER/WER/BLEU scoring, and an ASR -> MT -> TTS orchestrator
that talks to model backends over a small HTTP/JSON protocol (with
deterministic in-process mocks for offline runs).
"""

__version__ = "0.1.0"

# Version of the /v1/{asr,mt,tts} wire protocol; bump on schema changes.
PROTOCOL_VERSION = "1"
