"""End-to-end chain: downmix -> denoise -> equalize -> resample -> ASR -> LLM label.

Every stage is timed with a wall clock. Batch mode scores transcripts against
the manifest phrases (pooled WER) and labels against the manifest prompts
(exact match).
"""
from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .audio_core import DEFAULT_RATE_HZ, AudioBuffer, SignalStats, downmix_mono, load_wav, resample, signal_stats
from .denoiser import DEFAULT_NOISE_MS, GateConfig, denoise
from .eq_filters import EqualizerSpec, equalize
from .errors import MedSpeechError, StageError
from .inference import (
    AsrBackendConfig,
    Label,
    LlmBackendConfig,
    RemoteAsr,
    RemoteLlm,
    Transcript,
    classify,
    transcribe,
)
from .wer import wer

log = logging.getLogger(__name__)

STAGES = ("downmix", "denoise", "equalize", "resample", "asr", "llm")
PREPROCESS_STAGES = STAGES[:4]


@dataclass(frozen=True)
class PipelineConfig:
    denoise_enabled: bool = True
    gate: GateConfig = field(default_factory=GateConfig)
    noise_ms: float = DEFAULT_NOISE_MS
    eq: EqualizerSpec = field(default_factory=EqualizerSpec)
    target_rate_hz: int = DEFAULT_RATE_HZ
    asr: AsrBackendConfig | None = None
    llm: LlmBackendConfig | None = None
    workers: int | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {"denoise_enabled", "gate", "noise_ms", "eq", "target_rate_hz", "asr", "llm", "workers"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(data)
        if "gate" in kw:
            kw["gate"] = GateConfig(**kw["gate"])
        if "eq" in kw:
            kw["eq"] = EqualizerSpec.from_dict(kw["eq"])
        if kw.get("asr") is not None:
            kw["asr"] = AsrBackendConfig(**kw["asr"])
        if kw.get("llm") is not None:
            kw["llm"] = LlmBackendConfig(**kw["llm"])
        return cls(**kw)

    def to_dict(self) -> dict:
        def backend(cfg):
            if cfg is None:
                return None
            d = dict(cfg.__dict__)
            d.pop("auth_token", None)
            return d

        return {
            "denoise_enabled": self.denoise_enabled,
            "gate": self.gate.to_dict(),
            "noise_ms": self.noise_ms,
            "eq": self.eq.to_dict(),
            "target_rate_hz": self.target_rate_hz,
            "asr": backend(self.asr),
            "llm": backend(self.llm),
            "workers": self.workers,
        }


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        return PipelineConfig.from_dict(json.load(fh))


@dataclass(frozen=True)
class PipelineResult:
    transcript: Transcript
    raw_transcript: str
    label: Label
    stage_timings: dict
    preprocessed_stats: SignalStats
    preprocessed: AudioBuffer


class _Timer:
    def __init__(self):
        self.timings = {}

    def run(self, stage, fn, *args):
        t0 = time.perf_counter()
        try:
            return fn(*args)
        except MedSpeechError as exc:
            raise StageError(stage, exc) from exc
        except (ValueError, OSError) as exc:
            raise StageError(stage, exc) from exc
        finally:
            self.timings[stage] = (time.perf_counter() - t0) * 1000.0


def _preprocess(audio, config, timer):
    x = timer.run("downmix", downmix_mono, audio)
    if config.denoise_enabled:
        x = timer.run("denoise", denoise, x, config.gate, config.noise_ms)
    else:
        timer.timings["denoise"] = 0.0
    x = timer.run("equalize", equalize, x, config.eq)
    return timer.run("resample", resample, x, config.target_rate_hz)


def preprocess(audio: AudioBuffer, config: PipelineConfig | None = None):
    """Run the four DSP stages; returns ``(audio, timings_ms)``."""
    config = PipelineConfig() if config is None else config
    timer = _Timer()
    out = _preprocess(audio, config, timer)
    return out, timer.timings


def build_backends(config: PipelineConfig):
    if config.asr is None or config.llm is None:
        raise ValueError("config needs both 'asr' and 'llm' backend sections (or pass backends explicitly)")
    return RemoteAsr(config.asr), RemoteLlm(config.llm)


def run(audio: AudioBuffer, config: PipelineConfig | None = None, asr=None, llm=None) -> PipelineResult:
    config = PipelineConfig() if config is None else config
    if asr is None or llm is None:
        default_asr, default_llm = build_backends(config)
        asr = asr or default_asr
        llm = llm or default_llm
    timer = _Timer()
    clean = _preprocess(audio, config, timer)
    stats = signal_stats(clean) if clean.samples.size else SignalStats(0.0, 0.0, float("-inf"), 0.0)
    transcript = timer.run("asr", transcribe, asr, clean)
    label = timer.run("llm", classify, llm, transcript.raw_text)
    timings = {stage: timer.timings[stage] for stage in STAGES}
    return PipelineResult(transcript, transcript.raw_text, label, timings, stats, clean)


def _run_record(record, audio_root, config, asr, llm, score):
    try:
        try:
            audio = load_wav(record.resolve_audio(audio_root))
        except MedSpeechError as exc:
            raise StageError("load", exc) from exc
        result = run(audio, config, asr, llm)
    except StageError as exc:
        log.warning("%s failed in %s: %s", record.id, exc.stage, exc.cause)
        return {
            "id": record.id,
            "error": {"stage": exc.stage, "type": type(exc.cause).__name__, "message": str(exc.cause)},
        }, None
    entry = {
        "id": record.id,
        "transcript": result.transcript.text(),
        "raw_transcript": result.raw_transcript,
        "label": result.label.value,
        "raw_response": result.label.raw_response,
        "timings": {k: round(v, 3) for k, v in result.stage_timings.items()},
    }
    breakdown = None
    if score:
        breakdown = wer(record.phrase, result.transcript)
        entry.update(
            gold_phrase=record.phrase,
            gold_label=record.prompt,
            wer=breakdown.wer,
            match=result.label.value == record.prompt,
        )
    return entry, breakdown


def run_batch(records, config: PipelineConfig | None = None, audio_root=".", asr=None, llm=None, score=True, workers=None):
    """Run every record; failures are reported per record and do not stop the batch.

    Returns the report dict. ``summary.accuracy`` counts failed records as
    misses; ``summary.corpus_wer`` pools the successful records only.
    """
    config = PipelineConfig() if config is None else config
    if asr is None or llm is None:
        default_asr, default_llm = build_backends(config)
        asr = asr or default_asr
        llm = llm or default_llm
    records = list(records)
    workers = workers or config.workers or os.cpu_count() or 1
    workers = max(1, min(workers, len(records) or 1))
    args = (Path(audio_root), config, asr, llm, score)
    if workers == 1:
        outcomes = [_run_record(r, *args) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda r: _run_record(r, *args), records))
    entries = [e for e, _ in outcomes]
    failures = sum(1 for e in entries if "error" in e)
    summary = {"records": len(entries), "successes": len(entries) - failures, "failures": failures}
    if score:
        scored = [b for _, b in outcomes if b is not None]
        summary["corpus_wer"] = corpus_wer_from(scored)
        matches = sum(1 for e in entries if e.get("match"))
        summary["matches"] = matches
        summary["accuracy"] = matches / len(entries) if entries else None
    return {"records": entries, "summary": summary}


def corpus_wer_from(breakdowns):
    if not breakdowns:
        return None
    total = breakdowns[0]
    for b in breakdowns[1:]:
        total = total + b
    return total.wer


def dumps_report(report) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def side_by_side(report):
    """``(id, predicted, gold)`` rows for label inspection."""
    return [
        (e["id"], e["label"], e.get("gold_label"))
        for e in report["records"]
        if "error" not in e
    ]
