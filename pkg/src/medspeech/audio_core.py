"""Audio container, WAV codec, channel/rate conditioning and level measurements.

Samples are float64 amplitudes nominally in [-1, 1]. Integer PCM only exists at
the file boundary: 16-bit values are divided by 32768 on load.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _accel
from .errors import (
    EmptyBuffer,
    InvalidBuffer,
    IoFailure,
    MalformedHeader,
    OutOfRange,
    UnsupportedEncoding,
    UnsupportedRate,
)

MIN_RATE_HZ = 8000
DEFAULT_RATE_HZ = 16000
DEFAULT_CLIP_THRESHOLD = 0.999

PCM16 = "pcm16"
FLOAT32 = "float32"

_FORMAT_PCM = 0x0001
_FORMAT_FLOAT = 0x0003
_FORMAT_EXTENSIBLE = 0xFFFE

RESAMPLE_TAPS = 32
KAISER_BETA = 8.6
# passband edge as a fraction of the lower Nyquist frequency
RESAMPLE_ROLLOFF = 0.95


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Interleaved PCM samples plus format. Immutable: ``samples`` is read-only."""

    samples: np.ndarray
    sample_rate_hz: int
    channels: int = 1

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64).reshape(-1)
        if self.channels < 1:
            raise InvalidBuffer(f"channels must be positive, got {self.channels}")
        if samples.size % self.channels:
            raise InvalidBuffer(
                f"{samples.size} samples is not a multiple of {self.channels} channels"
            )
        if not np.all(np.isfinite(samples)):
            raise InvalidBuffer("samples contain NaN or Inf")
        if int(self.sample_rate_hz) != self.sample_rate_hz or self.sample_rate_hz < MIN_RATE_HZ:
            raise InvalidBuffer(f"sample rate must be an integer >= {MIN_RATE_HZ} Hz")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))
        object.__setattr__(self, "channels", int(self.channels))

    @property
    def frames(self) -> int:
        return self.samples.size // self.channels

    @property
    def duration_s(self) -> float:
        return self.frames / self.sample_rate_hz

    def as_frames(self) -> np.ndarray:
        """View of the samples as a (frames, channels) array."""
        return self.samples.reshape(-1, self.channels)

    def with_samples(self, samples) -> "AudioBuffer":
        return AudioBuffer(samples, self.sample_rate_hz, self.channels)

    def __eq__(self, other):
        if not isinstance(other, AudioBuffer):
            return NotImplemented
        return (
            self.sample_rate_hz == other.sample_rate_hz
            and self.channels == other.channels
            and np.array_equal(self.samples, other.samples)
        )

    __hash__ = None


@dataclass(frozen=True)
class SignalStats:
    peak: float
    rms: float
    rms_dbfs: float
    clipped_fraction: float

    def to_dict(self):
        return {
            "peak": self.peak,
            "rms": self.rms,
            "rms_dbfs": self.rms_dbfs,
            "clipped_fraction": self.clipped_fraction,
        }


def _require_mono(buffer, op):
    if buffer.channels != 1:
        raise InvalidBuffer(f"{op} needs a mono buffer, got {buffer.channels} channels")


# ---------------------------------------------------------------------------
# WAV codec


def _iter_chunks(data):
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        body_end = body_start + size
        if body_end > len(data):
            raise MalformedHeader(
                f"chunk {chunk_id!r} claims {size} bytes but only {len(data) - body_start} remain"
            )
        yield chunk_id, data[body_start:body_end]
        pos = body_end + (size & 1)


def _parse_fmt(body):
    if len(body) < 16:
        raise MalformedHeader("fmt chunk shorter than 16 bytes")
    tag, channels, rate, _byte_rate, block_align, bits = struct.unpack_from("<HHIIHH", body)
    if tag == _FORMAT_EXTENSIBLE:
        if len(body) < 40:
            raise MalformedHeader("extensible fmt chunk shorter than 40 bytes")
        # SubFormat GUID starts at byte 24; its first two bytes carry the format tag
        (tag,) = struct.unpack_from("<H", body, 24)
    if tag == _FORMAT_PCM and bits == 16:
        encoding = PCM16
    elif tag == _FORMAT_FLOAT and bits == 32:
        encoding = FLOAT32
    else:
        raise UnsupportedEncoding(f"format tag 0x{tag:04x} with {bits} bits per sample")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels (only 1 or 2 supported)")
    if block_align != channels * bits // 8:
        raise MalformedHeader(f"block align {block_align} inconsistent with {channels}x{bits} bit")
    return encoding, channels, rate


def decode_wav(data: bytes) -> AudioBuffer:
    """Decode an in-memory RIFF/WAVE file."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedHeader("not a RIFF/WAVE file")
    (riff_size,) = struct.unpack_from("<I", data, 4)
    if riff_size + 8 > len(data):
        raise MalformedHeader(f"RIFF size {riff_size} exceeds file length {len(data)}")
    data = data[:riff_size + 8]
    fmt = None
    payload = None
    for chunk_id, body in _iter_chunks(data):
        if chunk_id == b"fmt ":
            fmt = _parse_fmt(body)
        elif chunk_id == b"data":
            payload = body
            break
    if fmt is None:
        raise MalformedHeader("missing fmt chunk before data")
    if payload is None:
        raise MalformedHeader("missing data chunk")
    encoding, channels, rate = fmt
    width = 2 if encoding == PCM16 else 4
    if len(payload) % (width * channels):
        raise MalformedHeader("data chunk is not a whole number of frames")
    if encoding == PCM16:
        samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    else:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    try:
        return AudioBuffer(samples, rate, channels)
    except InvalidBuffer as exc:
        raise MalformedHeader(str(exc)) from exc


def load_wav(path) -> AudioBuffer:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return decode_wav(data)


def encode_wav(buffer: AudioBuffer, encoding: str = PCM16) -> bytes:
    if encoding == PCM16:
        if buffer.samples.size and np.max(np.abs(buffer.samples)) > 1.0:
            raise OutOfRange("pcm16 needs samples within [-1, 1]; clip or normalize first")
        q = np.clip(np.round(buffer.samples * 32768.0), -32768, 32767)
        payload = q.astype("<i2").tobytes()
        tag, bits = _FORMAT_PCM, 16
    elif encoding == FLOAT32:
        payload = buffer.samples.astype("<f4").tobytes()
        tag, bits = _FORMAT_FLOAT, 32
    else:
        raise UnsupportedEncoding(f"cannot write encoding {encoding!r}")
    block_align = buffer.channels * bits // 8
    fmt = struct.pack(
        "<HHIIHH",
        tag,
        buffer.channels,
        buffer.sample_rate_hz,
        buffer.sample_rate_hz * block_align,
        block_align,
        bits,
    )
    pad = b"\x00" if len(payload) & 1 else b""
    body = (
        b"WAVE"
        + b"fmt " + struct.pack("<I", len(fmt)) + fmt
        + b"data" + struct.pack("<I", len(payload)) + payload + pad
    )
    return b"RIFF" + struct.pack("<I", len(body)) + body


def save_wav(buffer: AudioBuffer, path, encoding: str = PCM16) -> None:
    """Write ``buffer`` as PCM16 or float32.

    float32 round-trips exactly for samples that are float32-representable.
    """
    data = encode_wav(buffer, encoding)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# conditioning


def downmix_mono(buffer: AudioBuffer) -> AudioBuffer:
    """Average the channels of each frame."""
    if buffer.channels == 1:
        return buffer
    mono = buffer.as_frames().mean(axis=1)
    return AudioBuffer(mono, buffer.sample_rate_hz, 1)


def _kaiser_sinc_table(up, down, taps=RESAMPLE_TAPS, beta=KAISER_BETA):
    # cutoff in cycles per input sample
    cutoff = 0.5 * min(1.0, up / down) * RESAMPLE_ROLLOFF
    half = taps // 2
    phases = np.arange(up)[:, None]
    # distance (in input samples) from the output instant to each tap
    frac = phases / up
    dist = frac - (np.arange(taps)[None, :] - half + 1)
    window = np.i0(beta * np.sqrt(np.clip(1.0 - (dist / half) ** 2, 0.0, None))) / np.i0(beta)
    table = 2.0 * cutoff * np.sinc(2.0 * cutoff * dist) * window
    # unit DC gain on every phase
    return table / table.sum(axis=1, keepdims=True)


_TABLE_CACHE: dict = {}


def _table_for(up, down):
    key = (up, down)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = _kaiser_sinc_table(up, down)
    return _TABLE_CACHE[key]


def resample(buffer: AudioBuffer, target_rate_hz: int) -> AudioBuffer:
    """Kaiser-windowed sinc interpolation to ``target_rate_hz`` (mono only).

    Each output sample reads 32 input samples; the ratio is reduced to lowest
    terms so the filter is a finite polyphase table.
    """
    _require_mono(buffer, "resample")
    if target_rate_hz < MIN_RATE_HZ:
        raise UnsupportedRate(f"target rate {target_rate_hz} Hz is below {MIN_RATE_HZ} Hz")
    if target_rate_hz == buffer.sample_rate_hz:
        return buffer
    ratio = Fraction(int(target_rate_hz), buffer.sample_rate_hz)
    up, down = ratio.numerator, ratio.denominator
    n_out = -(-buffer.frames * up // down)
    out = _accel.kernels.resample_polyphase(
        np.ascontiguousarray(buffer.samples), _table_for(up, down), up, down, n_out
    )
    return AudioBuffer(out, target_rate_hz, 1)


# ---------------------------------------------------------------------------
# measurement


def signal_stats(buffer: AudioBuffer, clip_threshold: float = DEFAULT_CLIP_THRESHOLD) -> SignalStats:
    if buffer.samples.size == 0:
        raise EmptyBuffer("cannot measure an empty buffer")
    if not 0.0 < clip_threshold <= 1.0:
        raise ValueError(f"clip_threshold must be in (0, 1], got {clip_threshold}")
    mag = np.abs(buffer.samples)
    peak = float(mag.max())
    rms = float(np.sqrt(np.mean(buffer.samples ** 2)))
    rms = min(rms, peak)  # guard the last ulp on constant signals
    rms_dbfs = 20.0 * math.log10(rms) if rms > 0 else -math.inf
    clipped = float(np.count_nonzero(mag >= clip_threshold)) / mag.size
    return SignalStats(peak, rms, rms_dbfs, clipped)


def clipping_ratio(buffer: AudioBuffer, clip_threshold: float = DEFAULT_CLIP_THRESHOLD) -> float:
    """Fraction of samples at or above ``clip_threshold`` in magnitude."""
    return signal_stats(buffer, clip_threshold).clipped_fraction


def rms(buffer: AudioBuffer) -> float:
    if buffer.samples.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(buffer.samples ** 2)))
