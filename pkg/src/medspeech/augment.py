"""Robustness augmentation (white noise at a target SNR, hard clipping) and SNR measurement.

Noise is drawn from numpy's ``Generator(PCG64(seed))`` standard normal stream,
so a seed reproduces the same noise on any platform numpy supports.
"""
from __future__ import annotations

import math

import numpy as np

from .audio_core import AudioBuffer
from .errors import LengthMismatch, RateMismatch, SilentSignal


def noise_generator(seed: int) -> np.random.Generator:
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def add_white_noise(buffer: AudioBuffer, snr_db: float, seed: int = 0) -> AudioBuffer:
    """Mix in Gaussian white noise at exactly ``snr_db`` over the whole buffer.

    The drawn noise is rescaled by its realised power, not its nominal
    variance, so ``measure_snr(buffer, result)`` returns ``snr_db`` up to
    rounding.
    """
    x = buffer.samples
    signal_power = float(np.mean(x * x)) if x.size else 0.0
    if signal_power == 0.0:
        raise SilentSignal("SNR is undefined for a silent buffer")
    noise = noise_generator(seed).standard_normal(x.size)
    noise_power = float(np.mean(noise * noise))
    target = signal_power / 10.0 ** (snr_db / 10.0)
    noise *= math.sqrt(target / noise_power)
    return buffer.with_samples(x + noise)


def hard_clip(buffer: AudioBuffer, threshold: float) -> AudioBuffer:
    """Saturate every sample to ``[-threshold, threshold]``."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    return buffer.with_samples(np.clip(buffer.samples, -threshold, threshold))


def measure_snr(clean: AudioBuffer, degraded: AudioBuffer) -> float:
    """``10 log10(sum clean^2 / sum (degraded - clean)^2)``; ``math.inf`` when identical."""
    if clean.samples.size != degraded.samples.size:
        raise LengthMismatch(f"{clean.samples.size} vs {degraded.samples.size} samples")
    if clean.sample_rate_hz != degraded.sample_rate_hz:
        raise RateMismatch(f"{clean.sample_rate_hz} vs {degraded.sample_rate_hz} Hz")
    err = degraded.samples - clean.samples
    noise = float(np.dot(err, err))
    if noise == 0.0:
        return math.inf
    signal = float(np.dot(clean.samples, clean.samples))
    if signal == 0.0:
        return -math.inf
    return 10.0 * math.log10(signal / noise)
