"""ASR and LLM backends: a small JSON-over-HTTP client pair and deterministic mocks.

Wire protocol (both are ``POST`` with a JSON body and JSON reply):

* ASR: ``{"audio": <base64 PCM16 WAV>, "sample_rate_hz": int}`` -> ``{"text": str}``
* LLM: ``{"prompt": str, "model": str}`` -> ``{"completion": str}``

A bearer token, when configured, goes in the ``Authorization`` header.
"""
from __future__ import annotations

import base64
import hashlib
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import requests

from .audio_core import PCM16, AudioBuffer, encode_wav
from .dataset import END_OF_TEXT, RESPONSE_MARKER, TASK_INSTRUCTION, fill_template
from .errors import (
    BackendError,
    EmptyTranscription,
    Timeout,
    TransportFailure,
    UnknownFingerprint,
    UnparseableResponse,
)
from .wer import WordSequence, normalize_tokens

log = logging.getLogger(__name__)

ASR_TOKEN_ENV = "MEDSPEECH_ASR_TOKEN"
LLM_TOKEN_ENV = "MEDSPEECH_LLM_TOKEN"
DEFAULT_LLM_MODEL = "Qwen/Qwen2-7B-Instruct"

# Alpaca prompt with the instruction filled in, cut right after the Response header.
DEFAULT_PROMPT_TEMPLATE = fill_template(
    TASK_INSTRUCTION + "\n\n### Instruction:\n{}\n\n### Input:\n{}\n\n### Response:\n",
    TASK_INSTRUCTION,
    "{}",
)


@dataclass(frozen=True)
class AsrBackendConfig:
    endpoint_url: str
    timeout_ms: int = 30000
    audio_encoding: str = "wav_pcm16"
    auth_token: str | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.audio_encoding != "wav_pcm16":
            raise ValueError(f"unsupported audio encoding {self.audio_encoding!r}")


@dataclass(frozen=True)
class LlmBackendConfig:
    endpoint_url: str
    timeout_ms: int = 60000
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE
    auth_token: str | None = field(default=None, repr=False)
    model: str = DEFAULT_LLM_MODEL

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if RESPONSE_MARKER not in self.prompt_template:
            raise ValueError(f"prompt_template must contain {RESPONSE_MARKER!r}")
        if self.prompt_template.count("{}") != 1:
            raise ValueError("prompt_template needs exactly one {} slot for the transcript")


@dataclass(frozen=True)
class Transcript(WordSequence):
    """Normalised words plus the backend's raw text."""

    raw_text: str = ""


@dataclass(frozen=True)
class Label:
    value: str
    raw_response: str


def render_prompt(transcript_text: str, template: str = DEFAULT_PROMPT_TEMPLATE) -> str:
    return fill_template(template, transcript_text)


def parse_label(raw: str) -> Label:
    """First line after the last Response marker; else the first non-blank line."""
    body = raw.rsplit(RESPONSE_MARKER, 1)[1] if RESPONSE_MARKER in raw else raw
    body = body.replace(END_OF_TEXT, "\n")
    for line in body.splitlines():
        value = line.strip()
        if value:
            return Label(value, raw)
    raise UnparseableResponse(f"no label line in backend response {raw[:120]!r}")


# ---------------------------------------------------------------------------
# remote backends


def _token(explicit, env_name):
    return explicit if explicit is not None else os.environ.get(env_name)


class _HttpBackend:
    def __init__(self, endpoint_url, timeout_ms, token, session=None):
        self.endpoint_url = endpoint_url
        self.timeout_s = timeout_ms / 1000.0
        self._token = token
        self._session = session or requests.Session()

    def _post(self, payload, key):
        headers = {"Content-Type": "application/json", "Accept": "application/json"}
        if self._token:
            headers["Authorization"] = f"Bearer {self._token}"
        try:
            resp = self._session.post(self.endpoint_url, json=payload, headers=headers, timeout=self.timeout_s)
        except requests.Timeout as exc:
            raise Timeout(f"{self.endpoint_url} did not answer within {self.timeout_s:g} s") from exc
        except requests.RequestException as exc:
            raise TransportFailure(f"{self.endpoint_url}: {exc}") from exc
        if resp.status_code >= 400:
            raise BackendError(resp.status_code, resp.text)
        try:
            value = resp.json()[key]
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendError(resp.status_code, resp.text) from exc
        if not isinstance(value, str):
            raise BackendError(resp.status_code, resp.text)
        return value


class RemoteAsr(_HttpBackend):
    def __init__(self, config: AsrBackendConfig, session=None):
        super().__init__(config.endpoint_url, config.timeout_ms, _token(config.auth_token, ASR_TOKEN_ENV), session)
        self.config = config

    def transcribe_text(self, audio: AudioBuffer) -> str:
        # the codec refuses out-of-range PCM16; EQ boosts can overshoot slightly
        clipped = audio.with_samples(np.clip(audio.samples, -1.0, 1.0))
        wav = encode_wav(clipped, PCM16)
        payload = {"audio": base64.b64encode(wav).decode("ascii"), "sample_rate_hz": audio.sample_rate_hz}
        return self._post(payload, "text")


class RemoteLlm(_HttpBackend):
    def __init__(self, config: LlmBackendConfig, session=None):
        super().__init__(config.endpoint_url, config.timeout_ms, _token(config.auth_token, LLM_TOKEN_ENV), session)
        self.config = config
        self.prompt_template = config.prompt_template

    def complete(self, prompt: str) -> str:
        return self._post({"prompt": prompt, "model": self.config.model}, "completion")


# ---------------------------------------------------------------------------
# mocks


def fingerprint(audio: AudioBuffer) -> str:
    """Content hash of rate, channel count and the float64 samples."""
    h = hashlib.sha256()
    h.update(f"{audio.sample_rate_hz}:{audio.channels}:".encode())
    h.update(np.ascontiguousarray(audio.samples, dtype="<f8").tobytes())
    return h.hexdigest()


SIGNATURE_BAND_HZ = (300.0, 3400.0)
SIGNATURE_BANDS = 48


def spectral_signature(audio: AudioBuffer) -> np.ndarray:
    """Unit-norm band amplitudes over the telephone band.

    Ignores phase, level, length, rumble below 300 Hz and hiss above 3.4 kHz,
    so it survives the denoise/EQ chain.
    """
    x = audio.samples if audio.channels == 1 else audio.as_frames().mean(axis=1)
    power = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(x.size, 1.0 / audio.sample_rate_hz)
    edges = np.geomspace(*SIGNATURE_BAND_HZ, SIGNATURE_BANDS + 1)
    band = np.searchsorted(edges, freqs, side="right") - 1
    inside = (band >= 0) & (band < SIGNATURE_BANDS)
    energy = np.bincount(band[inside], weights=power[inside], minlength=SIGNATURE_BANDS)
    sig = np.sqrt(energy)
    norm = np.linalg.norm(sig)
    return sig / norm if norm > 0 else sig


class MockAsr:
    """Table-driven ASR stand-in.

    ``match="exact"`` looks audio up by :func:`fingerprint`; ``match="tolerant"``
    picks the registered clip whose :func:`spectral_signature` is most similar,
    if the cosine similarity reaches ``min_similarity``. Misses raise
    :class:`UnknownFingerprint` when ``strict``, else return ``fallback``.
    """

    def __init__(self, table=None, strict=True, fallback="", match="exact", min_similarity=0.95):
        if match not in ("exact", "tolerant"):
            raise ValueError(f"match must be 'exact' or 'tolerant', got {match!r}")
        self._table = dict(table or {})
        self._signatures = []
        self.strict = strict
        self.fallback = fallback
        self.match = match
        self.min_similarity = min_similarity

    def register(self, audio: AudioBuffer, text: str) -> str:
        key = fingerprint(audio)
        self._table[key] = text
        self._signatures.append((spectral_signature(audio), text))
        return key

    def _lookup(self, audio):
        if self.match == "exact":
            return self._table.get(fingerprint(audio))
        if not self._signatures:
            return None
        sig = spectral_signature(audio)
        scores = [float(np.dot(sig, s)) for s, _ in self._signatures]
        best = int(np.argmax(scores))
        return self._signatures[best][1] if scores[best] >= self.min_similarity else None

    def transcribe_text(self, audio: AudioBuffer) -> str:
        text = self._lookup(audio)
        if text is None:
            if self.strict:
                raise UnknownFingerprint(f"no mock transcription for audio {fingerprint(audio)[:12]}")
            return self.fallback
        return text


def mock_asr(table, strict=True, fallback="") -> MockAsr:
    return MockAsr(table, strict=strict, fallback=fallback)


class MockLlm:
    """Keyword classifier that answers like a fine-tuned model would.

    Only the ``### Input:`` section of the prompt is searched, case-insensitively;
    the first matching ``(keyword, label)`` rule wins.
    """

    def __init__(self, rules, default=None, echo_prompt=False, prompt_template=DEFAULT_PROMPT_TEMPLATE):
        self.rules = [(k.lower(), v) for k, v in rules]
        self.default = default
        self.echo_prompt = echo_prompt
        self.prompt_template = prompt_template

    @staticmethod
    def _input_section(prompt):
        if "### Input:" not in prompt:
            return prompt
        return prompt.split("### Input:", 1)[1].split(RESPONSE_MARKER, 1)[0]

    def complete(self, prompt: str) -> str:
        text = self._input_section(prompt).lower()
        label = next((v for k, v in self.rules if k in text), self.default)
        answer = "" if label is None else f"{label}\n{END_OF_TEXT}"
        return prompt + answer if self.echo_prompt else answer


# ---------------------------------------------------------------------------
# the two model calls


def transcribe(backend, audio: AudioBuffer) -> Transcript:
    raw = backend.transcribe_text(audio)
    words = normalize_tokens(raw).words
    if not words:
        raise EmptyTranscription(f"backend returned no words (raw {raw!r})")
    log.debug("transcript: %r", raw)
    return Transcript(words, raw_text=raw)


def classify(backend, transcript_text: str) -> Label:
    if not transcript_text.strip():
        raise ValueError("transcript text is empty")
    template = getattr(backend, "prompt_template", DEFAULT_PROMPT_TEMPLATE)
    raw = backend.complete(render_prompt(transcript_text, template))
    return parse_label(raw)
