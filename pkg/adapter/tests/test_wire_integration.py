"""Drive the real pipeline CLI against a live adapter over HTTP.

No imports from the pipeline package: the adapter serves on a socket and
the `dialectpipe` console command (when installed) talks to it, proving
the two sides agree on the wire format. Skipped when the CLI is absent.
"""

import json
import shutil
import struct
import subprocess
import threading
import time

import numpy as np
import pytest
import uvicorn

from stage_adapter.config import AdapterConfig
from stage_adapter.server import create_app

pytestmark = pytest.mark.skipif(
    shutil.which("dialectpipe") is None,
    reason="pipeline CLI not installed in this environment",
)


def write_pcm16_wav(path, samples, rate=16000):
    payload = (
        np.clip(np.rint(np.asarray(samples) * 32768.0), -32768, 32767)
        .astype("<i2")
        .tobytes()
    )
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 1, 1, rate, rate * 2, 2, 16,
        b"data", len(payload),
    )
    path.write_bytes(header + payload)


@pytest.fixture(scope="module")
def adapter_url():
    cfg = AdapterConfig(
        asr_model_ref="dummy:wire",
        mt_model_ref="dummy:wire",
        tts_model_ref="dummy:wire",
    )
    config = uvicorn.Config(
        create_app(cfg), host="127.0.0.1", port=0, log_level="warning"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("adapter did not start")
        time.sleep(0.05)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=10)


def test_pipeline_run_against_adapter(tmp_path, adapter_url):
    wav = tmp_path / "clip.wav"
    t = np.arange(10 * 16000) / 16000
    write_pcm16_wav(wav, 0.3 * np.sin(2 * np.pi * 330 * t))
    out_dir = tmp_path / "out"
    proc = subprocess.run(
        [
            "dialectpipe", "run",
            "--input", str(wav),
            "--out", str(out_dir),
            "--asr-url", adapter_url,
            "--mt-url", adapter_url,
            "--tts-url", adapter_url,
            "--jobs", "2",
        ],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    summary = json.loads(proc.stdout)
    assert summary["chunks"] == 2
    assert summary["rows"] == 2
    assert summary["failures"] == 0
    rows = [
        json.loads(line)
        for line in (out_dir / "results.jsonl").read_text().splitlines()
    ]
    assert [r["id"] for r in rows] == ["clip:1", "clip:2"]
    assert all(r["dialect_text"].startswith("wire transcript") for r in rows)
    assert (out_dir / "clip.standard.wav").exists()
