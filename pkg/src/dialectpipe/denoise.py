"""Stationary spectral-gating noise reduction.

Estimates a per-bin noise floor from STFT magnitude statistics, then
attenuates time-frequency cells that do not rise above it. The STFT/ISTFT
pair uses a periodic Hann window with hop = fft_size/4 and weighted
overlap-add, which reconstructs perfectly (error < 1e-6) when the gate is
open everywhere, preserves signal length exactly, and never adds energy:
the synthesis normalization bounds the operator norm by 1 for any gain
mask <= 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .audio_io import AudioSignal
from .errors import ProfileMismatch, TooShort


@dataclass(frozen=True)
class GateParams:
    """Gate configuration; defaults mirror common stationary denoisers."""

    fft_size: int = 1024
    hop: int = 256
    n_std_thresh: float = 1.5
    prop_decrease: float = 1.0
    smoothing_bins: int = 4
    smoothing_frames: int = 4

    def __post_init__(self):
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            raise ValueError(f"fft_size must be a power of two, got {self.fft_size}")
        if not 0 < self.hop <= self.fft_size:
            raise ValueError(f"hop must be in (0, fft_size], got {self.hop}")
        if not 0.0 <= self.prop_decrease <= 1.0:
            raise ValueError(f"prop_decrease must be in [0, 1], got {self.prop_decrease}")
        if self.smoothing_bins < 1 or self.smoothing_frames < 1:
            raise ValueError("smoothing widths must be >= 1")


@dataclass(frozen=True)
class NoiseProfile:
    """Per-bin mean and standard deviation of STFT magnitude."""

    mean_mag: np.ndarray
    std_mag: np.ndarray
    fft_size: int

    def __post_init__(self):
        bins = self.fft_size // 2 + 1
        if len(self.mean_mag) != bins or len(self.std_mag) != bins:
            raise ValueError(f"profile needs {bins} bins for fft_size {self.fft_size}")


def _hann_periodic(n: int) -> np.ndarray:
    # Periodic variant; the symmetric np.hanning breaks COLA at hop n/4.
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _frames(x: np.ndarray, fft_size: int, hop: int) -> np.ndarray:
    n = 1 + (len(x) - fft_size) // hop
    idx = np.arange(fft_size)[None, :] + hop * np.arange(n)[:, None]
    return x[idx]


def stft(x: np.ndarray, fft_size: int, hop: int) -> np.ndarray:
    """Hann-windowed STFT of a zero-padded copy of ``x``.

    Padding is fft_size on the left and fft_size + hop on the right so every
    original sample has full window-sum coverage; :func:`istft` trims it.
    """
    padded = np.concatenate(
        [np.zeros(fft_size), np.asarray(x, dtype=np.float64), np.zeros(fft_size + hop)]
    )
    return np.fft.rfft(_frames(padded, fft_size, hop) * _hann_periodic(fft_size), axis=1)


def istft(spec: np.ndarray, fft_size: int, hop: int, length: int) -> np.ndarray:
    """Weighted overlap-add inverse of :func:`stft`, trimmed to ``length``."""
    window = _hann_periodic(fft_size)
    frames = np.fft.irfft(spec, n=fft_size, axis=1) * window
    total = fft_size + hop * (len(frames) - 1)
    out = np.zeros(total)
    norm = np.zeros(total)
    wsq = window * window
    for t in range(len(frames)):
        start = t * hop
        out[start : start + fft_size] += frames[t]
        norm[start : start + fft_size] += wsq
    region = slice(fft_size, fft_size + length)
    return out[region] / norm[region]


def estimate_noise_profile(sig: AudioSignal, params: GateParams) -> NoiseProfile:
    """Per-bin magnitude statistics over every full frame of ``sig``.

    Stationary mode: with no noise-only annotation the whole clip is the
    estimate. Raises :class:`TooShort` below one frame.
    """
    if len(sig) < params.fft_size:
        raise TooShort(
            f"need at least {params.fft_size} samples, got {len(sig)}"
        )
    window = _hann_periodic(params.fft_size)
    frames = _frames(np.asarray(sig.samples), params.fft_size, params.hop)
    mag = np.abs(np.fft.rfft(frames * window, axis=1))
    return NoiseProfile(mag.mean(axis=0), mag.std(axis=0), params.fft_size)


def spectral_gate(
    sig: AudioSignal, profile: NoiseProfile, params: GateParams
) -> AudioSignal:
    """Attenuate cells whose magnitude stays at the estimated noise floor.

    A cell passes when its magnitude exceeds mean + n_std_thresh * std for
    its bin; others are attenuated by ``prop_decrease``. The binary mask is
    box-smoothed over smoothing_frames x smoothing_bins before applying, so
    gains taper instead of gating hard. Output length and rate equal the
    input's exactly.
    """
    if profile.fft_size != params.fft_size:
        raise ProfileMismatch(
            f"profile fft_size {profile.fft_size} != params fft_size {params.fft_size}"
        )
    spec = stft(sig.samples, params.fft_size, params.hop)
    threshold = profile.mean_mag + params.n_std_thresh * profile.std_mag
    mask = (np.abs(spec) > threshold[None, :]).astype(np.float64)
    if params.smoothing_frames > 1 or params.smoothing_bins > 1:
        mask = uniform_filter(
            mask, size=(params.smoothing_frames, params.smoothing_bins), mode="nearest"
        )
    gain = 1.0 - params.prop_decrease * (1.0 - mask)
    out = istft(spec * gain, params.fft_size, params.hop, len(sig))
    return AudioSignal(out, sig.sample_rate, sig.source_id)


def denoise(sig: AudioSignal, params: GateParams | None = None) -> AudioSignal:
    """Stationary gate with the profile estimated from the clip itself."""
    params = params or GateParams()
    return spectral_gate(sig, estimate_noise_profile(sig, params), params)
