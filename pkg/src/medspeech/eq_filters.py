"""Biquad design (RBJ Audio-EQ-Cookbook) and the three-stage call-audio equalizer.

The default chain is high-pass 250 Hz -> low-pass 11 kHz -> high-shelf 4 kHz
(+3 dB), each a single second-order section with Butterworth Q.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .audio_core import AudioBuffer, _require_mono
from .errors import FrequencyOutOfRange

HIGH_PASS = "high_pass"
LOW_PASS = "low_pass"
HIGH_SHELF = "high_shelf"
KINDS = (HIGH_PASS, LOW_PASS, HIGH_SHELF)

BUTTERWORTH_Q = 1.0 / math.sqrt(2.0)
DEFAULT_SHELF_GAIN_DB = 3.0


@dataclass(frozen=True)
class BiquadCoefficients:
    """Second-order section normalised so that a0 == 1."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def is_stable(self) -> bool:
        return abs(self.a2) < 1.0 and abs(self.a1) < 1.0 + self.a2

    def as_tuple(self):
        return (self.b0, self.b1, self.b2, self.a1, self.a2)


IDENTITY = BiquadCoefficients(1.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class FilterStageSpec:
    kind: str
    frequency_hz: float
    q: float = BUTTERWORTH_Q
    gain_db: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}; expected one of {KINDS}")
        if not self.q > 0:
            raise ValueError(f"q must be positive, got {self.q}")
        if not self.frequency_hz > 0:
            raise FrequencyOutOfRange(f"frequency must be positive, got {self.frequency_hz}")

    def design(self, sample_rate_hz) -> BiquadCoefficients:
        if self.kind == HIGH_PASS:
            return design_high_pass(sample_rate_hz, self.frequency_hz, self.q)
        if self.kind == LOW_PASS:
            return design_low_pass(sample_rate_hz, self.frequency_hz, self.q)
        return design_high_shelf(sample_rate_hz, self.frequency_hz, self.gain_db, self.q)

    def to_dict(self):
        return {"kind": self.kind, "frequency_hz": self.frequency_hz, "q": self.q, "gain_db": self.gain_db}


def _default_stages():
    return (
        FilterStageSpec(HIGH_PASS, 250.0),
        FilterStageSpec(LOW_PASS, 11000.0),
        FilterStageSpec(HIGH_SHELF, 4000.0, gain_db=DEFAULT_SHELF_GAIN_DB),
    )


@dataclass(frozen=True)
class EqualizerSpec:
    stages: tuple = field(default_factory=_default_stages)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    @classmethod
    def empty(cls):
        return cls(stages=())

    def active_stages(self, sample_rate_hz):
        """Stages that act at this rate.

        A low-pass whose cutoff is at or above Nyquist has nothing left to
        remove (the 11 kHz stage on 16 kHz audio), so it is skipped rather
        than rejected.
        """
        nyquist = sample_rate_hz / 2.0
        return tuple(
            s for s in self.stages if not (s.kind == LOW_PASS and s.frequency_hz >= nyquist)
        )

    def design(self, sample_rate_hz):
        return [s.design(sample_rate_hz) for s in self.active_stages(sample_rate_hz)]

    def to_dict(self):
        return {"stages": [s.to_dict() for s in self.stages]}

    @classmethod
    def from_dict(cls, data):
        return cls(stages=tuple(FilterStageSpec(**s) for s in data["stages"]))


def _check_frequency(sample_rate_hz, frequency_hz):
    if not 0.0 < frequency_hz < sample_rate_hz / 2.0:
        raise FrequencyOutOfRange(
            f"{frequency_hz} Hz is outside (0, {sample_rate_hz / 2.0}) for fs={sample_rate_hz} Hz"
        )
    if not math.isfinite(frequency_hz):
        raise FrequencyOutOfRange(f"frequency must be finite, got {frequency_hz}")


def _omega_alpha(sample_rate_hz, frequency_hz, q):
    _check_frequency(sample_rate_hz, frequency_hz)
    if not q > 0:
        raise ValueError(f"q must be positive, got {q}")
    w0 = 2.0 * math.pi * frequency_hz / sample_rate_hz
    return math.cos(w0), math.sin(w0) / (2.0 * q)


def _normalise(b0, b1, b2, a0, a1, a2):
    return BiquadCoefficients(b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0)


def design_high_pass(sample_rate_hz, frequency_hz, q=BUTTERWORTH_Q) -> BiquadCoefficients:
    cw, alpha = _omega_alpha(sample_rate_hz, frequency_hz, q)
    return _normalise(
        (1.0 + cw) / 2.0, -(1.0 + cw), (1.0 + cw) / 2.0,
        1.0 + alpha, -2.0 * cw, 1.0 - alpha,
    )


def design_low_pass(sample_rate_hz, frequency_hz, q=BUTTERWORTH_Q) -> BiquadCoefficients:
    cw, alpha = _omega_alpha(sample_rate_hz, frequency_hz, q)
    return _normalise(
        (1.0 - cw) / 2.0, 1.0 - cw, (1.0 - cw) / 2.0,
        1.0 + alpha, -2.0 * cw, 1.0 - alpha,
    )


def design_high_shelf(sample_rate_hz, frequency_hz, gain_db=DEFAULT_SHELF_GAIN_DB, q=BUTTERWORTH_Q) -> BiquadCoefficients:
    """Cookbook high shelf; ``gain_db`` is the boost reached well above ``frequency_hz``."""
    cw, alpha = _omega_alpha(sample_rate_hz, frequency_hz, q)
    A = 10.0 ** (gain_db / 40.0)
    k = 2.0 * math.sqrt(A) * alpha
    return _normalise(
        A * ((A + 1.0) + (A - 1.0) * cw + k),
        -2.0 * A * ((A - 1.0) + (A + 1.0) * cw),
        A * ((A + 1.0) + (A - 1.0) * cw - k),
        (A + 1.0) - (A - 1.0) * cw + k,
        2.0 * ((A - 1.0) - (A + 1.0) * cw),
        (A + 1.0) - (A - 1.0) * cw - k,
    )


def apply_biquad(buffer: AudioBuffer, coeffs: BiquadCoefficients) -> AudioBuffer:
    """Causal transposed direct-form II filtering from zero state."""
    _require_mono(buffer, "apply_biquad")
    x = np.ascontiguousarray(buffer.samples)
    y = _accel.kernels.biquad_df2t(x, *coeffs.as_tuple())
    return AudioBuffer(y, buffer.sample_rate_hz, 1)


def equalize(buffer: AudioBuffer, spec: EqualizerSpec | None = None) -> AudioBuffer:
    """Run the stages of ``spec`` in order, each starting from zero state."""
    spec = EqualizerSpec() if spec is None else spec
    _require_mono(buffer, "equalize")
    out = buffer
    for coeffs in spec.design(buffer.sample_rate_hz):
        out = apply_biquad(out, coeffs)
    return out


def frequency_response(coeffs: BiquadCoefficients, frequencies_hz, sample_rate_hz):
    """Analytic response at each frequency.

    Returns ``(magnitude_db, phase_rad)`` arrays.
    """
    f = np.atleast_1d(np.asarray(frequencies_hz, dtype=np.float64))
    if np.any(f <= 0) or np.any(f >= sample_rate_hz / 2.0):
        raise FrequencyOutOfRange(f"response frequencies must lie in (0, {sample_rate_hz / 2.0}) Hz")
    z1 = np.exp(-2j * np.pi * f / sample_rate_hz)
    num = coeffs.b0 + coeffs.b1 * z1 + coeffs.b2 * z1 * z1
    den = 1.0 + coeffs.a1 * z1 + coeffs.a2 * z1 * z1
    h = num / den
    return 20.0 * np.log10(np.abs(h)), np.angle(h)


def cascade_response(coeff_list, frequencies_hz, sample_rate_hz):
    """Response of several sections in series (dB add, phases add)."""
    f = np.atleast_1d(np.asarray(frequencies_hz, dtype=np.float64))
    mag = np.zeros(f.shape)
    phase = np.zeros(f.shape)
    for c in coeff_list:
        m, p = frequency_response(c, f, sample_rate_hz)
        mag += m
        phase += p
    return mag, np.angle(np.exp(1j * phase))
