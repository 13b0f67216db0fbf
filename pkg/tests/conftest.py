from contextlib import contextmanager

import numpy as np
import pytest

from medspeech import _accel
from medspeech.audio_core import AudioBuffer


BACKENDS = _accel.available_backends()


@contextmanager
def use_backend(name):
    previous = _accel.BACKEND
    _accel.set_backend(name)
    try:
        yield name
    finally:
        _accel.set_backend(previous)


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Run the test once per kernel implementation."""
    with use_backend(request.param) as name:
        yield name


def sine(freq_hz, seconds=1.0, fs=16000, amplitude=1.0, phase=0.0):
    t = np.arange(int(round(seconds * fs))) / fs
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq_hz * t + phase), fs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def gate_mixture(seed=0, fs=16000, preamble_s=0.5, speech_s=3.0):
    """440 Hz tone (peak -6 dBFS) after a noise-only preamble, in white noise (RMS -26 dBFS).

    Returns ``(clean, noisy)``; the clean reference is silent over the preamble.
    """
    rng = np.random.default_rng(seed)
    n_pre = int(preamble_s * fs)
    n = n_pre + int(speech_s * fs)
    t = np.arange(n) / fs
    clean = np.where(np.arange(n) >= n_pre, 10 ** (-6 / 20) * np.sin(2 * np.pi * 440 * t), 0.0)
    noisy = clean + 10 ** (-26 / 20) * rng.standard_normal(n)
    return AudioBuffer(clean, fs), AudioBuffer(noisy, fs)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line[1])
