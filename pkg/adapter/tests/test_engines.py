import numpy as np
import pytest

from stage_adapter.config import AdapterConfig, StartupFailure, from_env
from stage_adapter.engines import SAMPLE_RATE, EngineSet, resolve_engine
from stage_adapter.server import create_app


class TestConfig:
    def test_at_least_one_stage_required(self):
        with pytest.raises(StartupFailure):
            AdapterConfig().validate()
        AdapterConfig(tts_model_ref="dummy:x").validate()

    def test_create_app_fails_without_stages(self):
        with pytest.raises(StartupFailure):
            create_app(AdapterConfig())

    def test_env_overrides(self, monkeypatch):
        monkeypatch.setenv("ADAPTER_ASR_MODEL", "dummy:env")
        monkeypatch.setenv("ADAPTER_PORT", "9123")
        cfg = from_env(AdapterConfig(mt_model_ref="dummy:base"))
        assert cfg.asr_model_ref == "dummy:env"
        assert cfg.mt_model_ref == "dummy:base"
        assert cfg.port == 9123


class TestEngineResolution:
    def test_unknown_scheme_is_startup_failure(self):
        with pytest.raises(StartupFailure):
            resolve_engine("asr", "s3://bucket/model", "cpu")

    def test_dummy_engines_load_for_all_stages(self):
        engines = EngineSet.load(
            {"asr": "dummy:a", "mt": "dummy:b", "tts": "dummy:c"}, "cpu"
        )
        assert engines.stages() == ["asr", "mt", "tts"]

    def test_hf_engine_without_checkpoint_fails_cleanly(self):
        # loading a nonexistent path must surface StartupFailure, not crash
        with pytest.raises(StartupFailure):
            resolve_engine("mt", "hf:/nonexistent/checkpoint/path", "cpu")


class TestDummyBehavior:
    def test_asr_depends_on_audio_content(self):
        engines = EngineSet.load({"asr": "dummy:t"}, "cpu")
        a = engines.run("asr", "transcribe", np.zeros(100), 16000)
        b = engines.run("asr", "transcribe", np.ones(100) * 0.5, 16000)
        assert a != b
        assert a == engines.run("asr", "transcribe", np.zeros(100), 16000)

    def test_tts_duration_scales_with_tokens(self):
        engines = EngineSet.load({"tts": "dummy:t"}, "cpu")
        two = engines.run("tts", "synthesize", "a b")
        five = engines.run("tts", "synthesize", "a b c d e")
        assert len(two) == round(2 * 0.2 * SAMPLE_RATE)
        assert len(five) == round(5 * 0.2 * SAMPLE_RATE)
        assert np.max(np.abs(five)) <= 1.0
