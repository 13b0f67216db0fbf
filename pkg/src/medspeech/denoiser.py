"""Stationary-noise suppression by STFT spectral gating.

The noise floor is measured once, per frequency bin, from a noise-only stretch
(by default the first 250 ms, where call recordings usually carry only line
noise). Bins that stay under ``threshold_factor`` times that floor are pulled
down by ``reduction_db``, with the gain ramped over a few frames so the gate
does not chatter.

Single noise bins poke above 1.5x their mean magnitude about a sixth of the
time, so the open/closed decision is taken on magnitudes box-averaged over
3 frames x 3 bins, and the resulting dB gain is averaged over 3 neighbouring
bins. Steady partials span several bins and frames and keep the gate open;
isolated noise spikes do not.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _accel
from .audio_core import AudioBuffer, _require_mono
from .errors import BufferTooShort, RateMismatch

log = logging.getLogger(__name__)

DEFAULT_FFT_SIZE = 1024
DEFAULT_HOP_SIZE = 256
DEFAULT_NOISE_MS = 250.0
MIN_NOISE_FRAMES = 4
# denoise() leaves audio alone if its loud frames are not this far above the preamble
DEFAULT_MIN_CONTRAST_DB = 6.0


@dataclass(frozen=True)
class NoiseProfile:
    bin_floor: np.ndarray
    fft_size: int
    hop_size: int
    sample_rate_hz: int

    def __post_init__(self):
        floor = np.array(self.bin_floor, dtype=np.float64)
        if self.fft_size <= 0 or self.fft_size & (self.fft_size - 1):
            raise ValueError(f"fft_size must be a power of two, got {self.fft_size}")
        if not 0 < self.hop_size <= self.fft_size:
            raise ValueError(f"hop_size must be in (0, fft_size], got {self.hop_size}")
        if floor.shape != (self.fft_size // 2 + 1,):
            raise ValueError(f"bin_floor needs {self.fft_size // 2 + 1} entries, got {floor.shape}")
        if not np.all(np.isfinite(floor)) or np.any(floor < 0):
            raise ValueError("bin_floor must be finite and non-negative")
        floor.setflags(write=False)
        object.__setattr__(self, "bin_floor", floor)

    @classmethod
    def zeros(cls, sample_rate_hz, fft_size=DEFAULT_FFT_SIZE, hop_size=DEFAULT_HOP_SIZE):
        return cls(np.zeros(fft_size // 2 + 1), fft_size, hop_size, sample_rate_hz)


@dataclass(frozen=True)
class GateConfig:
    threshold_factor: float = 1.5
    reduction_db: float = -30.0
    attack_frames: int = 2
    release_frames: int = 4

    def __post_init__(self):
        # threshold_factor == 0 is allowed and disables gating
        if self.threshold_factor < 0:
            raise ValueError(f"threshold_factor must be >= 0, got {self.threshold_factor}")
        if self.reduction_db > 0:
            raise ValueError(f"reduction_db must be <= 0, got {self.reduction_db}")
        if self.attack_frames < 0 or self.release_frames < 0:
            raise ValueError("attack_frames and release_frames must be >= 0")

    def to_dict(self):
        return {
            "threshold_factor": self.threshold_factor,
            "reduction_db": self.reduction_db,
            "attack_frames": self.attack_frames,
            "release_frames": self.release_frames,
        }


def hann(fft_size):
    """Periodic Hann window (sums to a constant at 75 % overlap)."""
    n = np.arange(fft_size)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / fft_size)


def _frames(x, fft_size, hop_size):
    n_frames = 1 + (x.size - fft_size) // hop_size if x.size >= fft_size else 0
    view = np.lib.stride_tricks.sliding_window_view(x, fft_size)
    return view[: n_frames * hop_size : hop_size] if n_frames else np.empty((0, fft_size))


def stft(x, fft_size=DEFAULT_FFT_SIZE, hop_size=DEFAULT_HOP_SIZE):
    """Zero-padded Hann STFT; every input sample is covered by full overlap.

    Returns ``(spectrum, pad_left)`` with spectrum shaped (frames, bins).
    """
    pad_left = fft_size
    n_frames = 1 + -(-(x.size + fft_size) // hop_size)
    pad_right = (n_frames - 1) * hop_size + fft_size - x.size - pad_left
    padded = np.concatenate([np.zeros(pad_left), x, np.zeros(pad_right)])
    frames = _frames(padded, fft_size, hop_size) * hann(fft_size)
    return np.fft.rfft(frames, axis=1), pad_left


def istft(spec, length, pad_left, fft_size=DEFAULT_FFT_SIZE, hop_size=DEFAULT_HOP_SIZE):
    """Weighted overlap-add inverse of :func:`stft`."""
    window = hann(fft_size)
    frames = np.fft.irfft(spec, n=fft_size, axis=1) * window
    total = (spec.shape[0] - 1) * hop_size + fft_size
    out = np.zeros(total)
    norm = np.zeros(total)
    wsq = window * window
    for f in range(spec.shape[0]):
        start = f * hop_size
        out[start:start + fft_size] += frames[f]
        norm[start:start + fft_size] += wsq
    out = out[pad_left:pad_left + length]
    norm = norm[pad_left:pad_left + length]
    return np.divide(out, norm, out=np.zeros_like(out), where=norm > 1e-12)


def estimate_noise_profile(
    buffer: AudioBuffer,
    noise_ms: float = DEFAULT_NOISE_MS,
    fft_size: int = DEFAULT_FFT_SIZE,
    hop_size: int = DEFAULT_HOP_SIZE,
    start_ms: float = 0.0,
) -> NoiseProfile:
    """Mean windowed magnitude per bin over ``[start_ms, start_ms + noise_ms)``."""
    _require_mono(buffer, "estimate_noise_profile")
    fs = buffer.sample_rate_hz
    start = int(round(start_ms * fs / 1000.0))
    length = int(round(noise_ms * fs / 1000.0))
    if start + length > buffer.frames:
        raise BufferTooShort(
            f"need {noise_ms} ms of noise from {start_ms} ms, buffer lasts {1000 * buffer.duration_s:.1f} ms"
        )
    segment = buffer.samples[start:start + length]
    frames = _frames(segment, fft_size, hop_size)
    if frames.shape[0] < MIN_NOISE_FRAMES:
        raise BufferTooShort(
            f"{noise_ms} ms gives {frames.shape[0]} STFT frames, need at least {MIN_NOISE_FRAMES}"
        )
    mags = np.abs(np.fft.rfft(frames * hann(fft_size), axis=1))
    return NoiseProfile(mags.mean(axis=0), fft_size, hop_size, fs)


def _box3(a, axis):
    """Mean over a 3-wide neighbourhood along ``axis`` with edge replication."""
    pad = [(0, 0)] * a.ndim
    pad[axis] = (1, 1)
    p = np.pad(a, pad, mode="edge")
    n = a.shape[axis]
    return (
        np.take(p, range(0, n), axis=axis)
        + np.take(p, range(1, n + 1), axis=axis)
        + np.take(p, range(2, n + 2), axis=axis)
    ) / 3.0


def spectral_gate(buffer: AudioBuffer, profile: NoiseProfile, config: GateConfig | None = None) -> AudioBuffer:
    config = GateConfig() if config is None else config
    _require_mono(buffer, "spectral_gate")
    if buffer.sample_rate_hz != profile.sample_rate_hz:
        raise RateMismatch(
            f"buffer is {buffer.sample_rate_hz} Hz but noise profile is {profile.sample_rate_hz} Hz"
        )
    if buffer.frames == 0:
        return buffer
    n, h = profile.fft_size, profile.hop_size
    spec, pad = stft(buffer.samples, n, h)
    level = _box3(_box3(np.abs(spec), axis=0), axis=1)
    floor = _box3(profile.bin_floor, axis=0)
    gains = _accel.kernels.gate_gains(
        np.ascontiguousarray(level),
        floor,
        float(config.threshold_factor),
        float(config.reduction_db),
        int(config.attack_frames),
        int(config.release_frames),
    )
    gains = 10.0 ** (_box3(20.0 * np.log10(gains), axis=1) / 20.0)
    out = istft(spec * gains, buffer.frames, pad, n, h)
    return AudioBuffer(out, buffer.sample_rate_hz, 1)


def preamble_contrast_db(buffer: AudioBuffer, profile: NoiseProfile) -> float:
    """How far (dB) the loud frames (90th percentile power) sit above the noise profile."""
    spec, _ = stft(buffer.samples, profile.fft_size, profile.hop_size)
    frame_power = np.mean(np.abs(spec) ** 2, axis=1)
    noise_power = np.mean(profile.bin_floor ** 2)
    loud = np.percentile(frame_power, 90)
    if noise_power <= 0:
        return np.inf
    if loud <= 0:
        return -np.inf
    return float(10.0 * np.log10(loud / noise_power))


def denoise(
    buffer: AudioBuffer,
    config: GateConfig | None = None,
    noise_ms: float = DEFAULT_NOISE_MS,
    min_contrast_db: float = DEFAULT_MIN_CONTRAST_DB,
) -> AudioBuffer:
    """Profile the opening ``noise_ms`` and gate the whole buffer against it.

    When the opening is not quieter than the rest (speech from the first
    sample, or a steady tone) the profile would describe signal rather than
    noise; in that case the buffer is returned untouched.
    """
    profile = estimate_noise_profile(buffer, noise_ms)
    contrast = preamble_contrast_db(buffer, profile)
    if contrast < min_contrast_db:
        log.info("preamble only %.1f dB below signal; skipping spectral gate", contrast)
        return buffer
    return spectral_gate(buffer, profile, config)
