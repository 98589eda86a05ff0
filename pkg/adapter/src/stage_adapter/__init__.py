"""Inference server wrapping real ASR/MT/TTS models behind the stage protocol.

Speaks the same /v1/{asr,mt,tts} HTTP/JSON wire format as the pipeline's
mock backends: id-echoing responses, base64 16-bit PCM audio payloads, and
the {code, message} error envelope. The pipeline stays ignorant of any ML
runtime; this package owns model loading, batching, and device placement.
"""

__version__ = "0.1.0"

PROTOCOL_VERSION = "1"
