"""Adapter configuration with environment-variable overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass


class StartupFailure(Exception):
    """A configured checkpoint could not be resolved or loaded."""


@dataclass
class AdapterConfig:
    """Model references are opaque to the server; engines interpret them.

    Supported reference schemes:
      - ``dummy:<tag>``  deterministic stub engines for integration testing
      - ``hf:<model-id-or-path>``  transformers checkpoints (extra: models)

    At least one stage must be configured; requests to unconfigured stages
    answer with the ``stage_unavailable`` error envelope.
    """

    asr_model_ref: str | None = None
    mt_model_ref: str | None = None
    tts_model_ref: str | None = None
    device: str = "cpu"
    port: int = 8008
    host: str = "127.0.0.1"
    max_connections: int = 64

    def configured_stages(self) -> dict[str, str]:
        refs = {
            "asr": self.asr_model_ref,
            "mt": self.mt_model_ref,
            "tts": self.tts_model_ref,
        }
        return {stage: ref for stage, ref in refs.items() if ref}

    def validate(self) -> None:
        if not self.configured_stages():
            raise StartupFailure("no stage configured; set at least one model ref")


def from_env(base: AdapterConfig | None = None) -> AdapterConfig:
    """Apply ADAPTER_* environment overrides on top of a base config."""
    cfg = base or AdapterConfig()
    env = os.environ
    return AdapterConfig(
        asr_model_ref=env.get("ADAPTER_ASR_MODEL", cfg.asr_model_ref),
        mt_model_ref=env.get("ADAPTER_MT_MODEL", cfg.mt_model_ref),
        tts_model_ref=env.get("ADAPTER_TTS_MODEL", cfg.tts_model_ref),
        device=env.get("ADAPTER_DEVICE", cfg.device),
        port=int(env.get("ADAPTER_PORT", cfg.port)),
        host=env.get("ADAPTER_HOST", cfg.host),
        max_connections=int(env.get("ADAPTER_MAX_CONNECTIONS", cfg.max_connections)),
    )
