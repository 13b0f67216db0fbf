"""``medspeech`` command line.

Exit status: 0 success, 1 domain error (bad file, failed records, ...),
2 usage error. Diagnostics go to stderr; data goes to files or stdout.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import audio_core, dataset, eq_filters, pipeline
from .augment import add_white_noise, hard_clip
from .errors import MedSpeechError
from .inference import MockAsr, MockLlm

log = logging.getLogger("medspeech")


# ---------------------------------------------------------------------------
# shared option groups


def _add_dsp_options(p):
    p.add_argument("--config", type=Path, help="JSON pipeline config; flags below override it")
    p.add_argument("--no-denoise", dest="denoise_enabled", action="store_const", const=False, default=None,
                   help="skip the spectral gate")
    p.add_argument("--noise-ms", type=float, help="noise-profile window at the start of the file (ms, default 250)")
    p.add_argument("--threshold-factor", type=float, help="gate threshold as a multiple of the noise floor (ratio, default 1.5)")
    p.add_argument("--reduction-db", type=float, help="attenuation of gated bins (dB, <= 0, default -30)")
    p.add_argument("--attack-frames", type=int, help="gate opening ramp (STFT frames, default 2)")
    p.add_argument("--release-frames", type=int, help="gate closing ramp (STFT frames, default 4)")
    p.add_argument("--no-eq", action="store_true", help="skip the equalizer")
    p.add_argument("--hp-hz", type=float, help="high-pass cutoff (Hz, default 250)")
    p.add_argument("--lp-hz", type=float, help="low-pass cutoff (Hz, default 11000; skipped when >= Nyquist)")
    p.add_argument("--shelf-hz", type=float, help="high-shelf midpoint (Hz, default 4000)")
    p.add_argument("--shelf-gain-db", type=float, help="high-shelf boost (dB, default +3)")
    p.add_argument("--q", type=float, help="Q of every EQ stage (dimensionless, default 0.7071)")


def _config_from_args(args, base=None):
    cfg = base or (pipeline.load_config(args.config) if getattr(args, "config", None) else pipeline.PipelineConfig())
    if args.denoise_enabled is not None:
        cfg = replace(cfg, denoise_enabled=args.denoise_enabled)
    if args.noise_ms is not None:
        cfg = replace(cfg, noise_ms=args.noise_ms)
    gate = {
        k: getattr(args, k)
        for k in ("threshold_factor", "reduction_db", "attack_frames", "release_frames")
        if getattr(args, k) is not None
    }
    if gate:
        cfg = replace(cfg, gate=replace(cfg.gate, **gate))
    if args.no_eq:
        cfg = replace(cfg, eq=eq_filters.EqualizerSpec.empty())
    else:
        overrides = {
            eq_filters.HIGH_PASS: args.hp_hz,
            eq_filters.LOW_PASS: args.lp_hz,
            eq_filters.HIGH_SHELF: args.shelf_hz,
        }
        stages = []
        for s in cfg.eq.stages:
            if overrides.get(s.kind) is not None:
                s = replace(s, frequency_hz=overrides[s.kind])
            if args.q is not None:
                s = replace(s, q=args.q)
            if s.kind == eq_filters.HIGH_SHELF and args.shelf_gain_db is not None:
                s = replace(s, gain_db=args.shelf_gain_db)
            stages.append(s)
        cfg = replace(cfg, eq=eq_filters.EqualizerSpec(tuple(stages)))
    return cfg


def _save(buffer, path, encoding):
    if encoding == audio_core.PCM16 and buffer.samples.size:
        peak = float(np.max(np.abs(buffer.samples)))
        if peak > 1.0:
            log.warning("peak %.3f exceeds full scale; clipping for pcm16 output", peak)
            buffer = hard_clip(buffer, 1.0)
    audio_core.save_wav(buffer, path, encoding)


# ---------------------------------------------------------------------------
# subcommands


def cmd_preprocess(args):
    cfg = _config_from_args(args)
    audio = audio_core.load_wav(args.input)
    x = audio_core.downmix_mono(audio)
    if cfg.denoise_enabled:
        from .denoiser import denoise

        x = denoise(x, cfg.gate, cfg.noise_ms)
    x = eq_filters.equalize(x, cfg.eq)
    if args.target_rate_hz:
        x = audio_core.resample(x, args.target_rate_hz)
    _save(x, args.output, args.encoding)
    if args.stats:
        print(json.dumps(audio_core.signal_stats(x).to_dict(), sort_keys=True))
    return 0


def cmd_augment(args):
    if args.snr_db is None and args.clip_threshold is None:
        raise _Usage("give --snr-db and/or --clip-threshold")
    audio = audio_core.load_wav(args.input)
    if args.snr_db is not None:
        audio = add_white_noise(audio, args.snr_db, args.seed)
    if args.clip_threshold is not None:
        audio = hard_clip(audio, args.clip_threshold)
    _save(audio, args.output, args.encoding)
    return 0


def _response_grid(fs, stage_freqs, args):
    if args.freqs:
        return np.array(sorted(float(f) for f in args.freqs.split(",")))
    grid = np.geomspace(args.f_min, 0.499 * fs, args.points)
    extra = [f for f in stage_freqs if 0 < f < fs / 2]
    return np.unique(np.concatenate([grid, extra]))


def _write_response(fh, freqs, mag, phase):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["frequency_hz", "magnitude_db", "phase_rad"])
    for f, m, p in zip(freqs, mag, phase):
        w.writerow([f"{f:.6f}", f"{m:.6f}", f"{p:.6f}"])


def cmd_filter_response(args):
    fs = args.fs
    if args.stage == "cascade":
        cfg = _config_from_args(args)
        stages = cfg.eq.active_stages(fs)
    else:
        default = next(s for s in eq_filters.EqualizerSpec().stages if s.kind == args.stage)
        stages = (eq_filters.FilterStageSpec(
            args.stage,
            args.fc if args.fc is not None else default.frequency_hz,
            args.q if args.q is not None else default.q,
            args.gain_db if args.gain_db is not None else default.gain_db,
        ),)
    coeffs = [s.design(fs) for s in stages]
    freqs = _response_grid(fs, [s.frequency_hz for s in stages], args)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for i, (s, c) in enumerate(zip(stages, coeffs)):
            with (out / f"{i}_{s.kind}.csv").open("w", newline="") as fh:
                _write_response(fh, freqs, *eq_filters.frequency_response(c, freqs, fs))
        with (out / "cascade.csv").open("w", newline="") as fh:
            _write_response(fh, freqs, *eq_filters.cascade_response(coeffs, freqs, fs))
    else:
        _write_response(sys.stdout, freqs, *eq_filters.cascade_response(coeffs, freqs, fs))
    return 0


def read_pairs(path):
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise dataset.MalformedRow(lineno, "expected reference<TAB>hypothesis")
            ref, hyp = line.split("\t", 1)
            pairs.append((ref, hyp))
    return pairs


def cmd_evaluate_wer(args):
    from .wer import corpus_wer, wer

    pairs = read_pairs(args.pairs)
    result = corpus_wer(pairs).to_dict()
    result["pairs"] = len(pairs)
    if args.per_pair:
        result["per_pair"] = [wer(r, h).to_dict() for r, h in pairs]
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_convert_dataset(args):
    records, summary = dataset.parse_manifest(args.manifest, args.audio_root, args.split_column)
    audio_root = None
    if args.absolute_audio:
        audio_root = Path(args.audio_root or Path(args.manifest).parent / "recordings").resolve()
    written = dataset.convert_dataset(records, args.out_dir, audio_root)
    out = {
        "splits": summary.to_dict(),
        "labels": dataset.label_inventory(records),
        "files": [str(p) for p in written],
    }
    print(json.dumps(out, indent=2, ensure_ascii=False))
    return 0


def load_mock_asr(path, audio_root, config):
    """Build a MockAsr from JSON.

    ``entries`` map audio files (relative to ``audio_root``) to text; each file
    is run through the configured preprocessing and registered under the
    resulting audio, so lookups hit exactly. ``fingerprints`` maps raw hashes.
    """
    spec = json.loads(Path(path).read_text(encoding="utf-8"))
    mock = MockAsr(
        spec.get("fingerprints"),
        strict=spec.get("strict", True),
        fallback=spec.get("fallback", ""),
        match=spec.get("match", "exact"),
        min_similarity=spec.get("min_similarity", 0.95),
    )
    for entry in spec.get("entries", []):
        audio = audio_core.load_wav(Path(audio_root) / entry["audio"])
        clean, _ = pipeline.preprocess(audio, config)
        mock.register(clean, entry["text"])
    return mock


def load_mock_llm(path):
    spec = json.loads(Path(path).read_text(encoding="utf-8"))
    return MockLlm([tuple(r) for r in spec["rules"]], default=spec.get("default"))


def cmd_run_pipeline(args):
    cfg = _config_from_args(args)
    if args.target_rate_hz:
        cfg = replace(cfg, target_rate_hz=args.target_rate_hz)
    records, _ = dataset.parse_manifest(args.manifest, args.audio_root, args.split_column)
    audio_root = Path(args.audio_root) if args.audio_root else Path(args.manifest).parent / "recordings"
    asr = load_mock_asr(args.mock_asr, audio_root, cfg) if args.mock_asr else None
    llm = load_mock_llm(args.mock_llm) if args.mock_llm else None
    report = pipeline.run_batch(
        records, cfg, audio_root, asr=asr, llm=llm, score=not args.no_score, workers=args.workers
    )
    text = pipeline.dumps_report(report)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    failures = report["summary"]["failures"]
    if failures:
        log.error("%d of %d records failed", failures, len(records))
        return 1
    return 0


# ---------------------------------------------------------------------------


class _Usage(Exception):
    pass


def build_parser():
    parser = argparse.ArgumentParser(prog="medspeech", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("preprocess", help="downmix, denoise, equalize (and optionally resample) a WAV file")
    p.add_argument("input", type=Path, help="input WAV (PCM16 or float32)")
    p.add_argument("output", type=Path, help="output WAV")
    _add_dsp_options(p)
    p.add_argument("--target-rate-hz", type=int, help="resample the result to this rate (Hz); default keeps the input rate")
    p.add_argument("--encoding", choices=[audio_core.FLOAT32, audio_core.PCM16], default=audio_core.FLOAT32,
                   help="output sample format (default float32)")
    p.add_argument("--stats", action="store_true", help="print peak/RMS (amplitude, dBFS) of the result as JSON")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("augment", help="add white noise at a target SNR and/or hard-clip a WAV file")
    p.add_argument("input", type=Path, help="input WAV (PCM16 or float32)")
    p.add_argument("output", type=Path, help="output WAV")
    p.add_argument("--snr-db", type=float, help="signal-to-noise ratio of the added noise (dB)")
    p.add_argument("--clip-threshold", type=float, help="clip level (amplitude, fraction of full scale in (0, 1])")
    p.add_argument("--seed", type=int, default=0, help="noise seed (unsigned 64-bit integer, default 0)")
    p.add_argument("--encoding", choices=[audio_core.FLOAT32, audio_core.PCM16], default=audio_core.FLOAT32,
                   help="output sample format (default float32)")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("filter-response", help="frequency response of an EQ stage or the whole chain as CSV")
    p.add_argument("--stage", choices=list(eq_filters.KINDS) + ["cascade"], default="cascade",
                   help="one stage, or the configured cascade (default)")
    p.add_argument("--fs", type=int, default=audio_core.DEFAULT_RATE_HZ, help="sample rate (Hz, default 16000)")
    p.add_argument("--fc", type=float, help="stage frequency for --stage (Hz)")
    p.add_argument("--gain-db", type=float, help="shelf gain for --stage high_shelf (dB)")
    p.add_argument("--points", type=int, default=200, help="log-spaced grid size (count, default 200)")
    p.add_argument("--f-min", type=float, default=20.0, help="lowest grid frequency (Hz, default 20)")
    p.add_argument("--freqs", help="explicit comma-separated frequencies (Hz) instead of the grid")
    p.add_argument("--out-dir", type=Path, help="write one CSV per stage plus cascade.csv here instead of stdout")
    _add_dsp_options(p)
    p.set_defaults(func=cmd_filter_response)

    p = sub.add_parser("evaluate-wer", help="pooled WER of reference<TAB>hypothesis lines, as JSON")
    p.add_argument("pairs", type=Path, help="UTF-8 file, one reference<TAB>hypothesis pair per line")
    p.add_argument("--per-pair", action="store_true", help="include each pair's breakdown")
    p.set_defaults(func=cmd_evaluate_wer)

    p = sub.add_parser("convert-dataset", help="write asr-{split}.jsonl and alpaca-{split}.jsonl from the manifest")
    p.add_argument("--manifest", type=Path, required=True, help="overview CSV")
    p.add_argument("--audio-root", type=Path, help="directory with train/ test/ validate/ (default: recordings/ next to the CSV)")
    p.add_argument("--split-column", help="take the split from this CSV column instead of the directory layout")
    p.add_argument("--out-dir", type=Path, required=True, help="directory for the JSONL files (created if missing)")
    p.add_argument("--absolute-audio", action="store_true", help="write absolute audio paths in the ASR files")
    p.set_defaults(func=cmd_convert_dataset)

    p = sub.add_parser("run-pipeline", help="run the full chain over a manifest and write a JSON report")
    p.add_argument("--manifest", type=Path, required=True, help="manifest CSV with file_name, phrase, prompt")
    p.add_argument("--audio-root", type=Path, help="directory with train/ test/ validate/ (default: recordings/ next to the CSV)")
    p.add_argument("--split-column", help="take the split from this CSV column instead of the directory layout")
    p.add_argument("--target-rate-hz", type=int, help="ASR input rate (Hz, default 16000)")
    p.add_argument("--mock-asr", type=Path, help="JSON mock ASR table instead of the configured endpoint")
    p.add_argument("--mock-llm", type=Path, help="JSON keyword rules instead of the configured endpoint")
    p.add_argument("--no-score", action="store_true", help="skip WER / accuracy against the manifest")
    p.add_argument("--workers", type=int, help="parallel records (count, default: CPU count)")
    p.add_argument("--report", type=Path, help="write the report here instead of stdout")
    _add_dsp_options(p)
    p.set_defaults(func=cmd_run_pipeline)
    for sp in sub.choices.values():
        sp.set_defaults(subparser=sp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except _Usage as exc:
        args.subparser.print_help(sys.stderr)
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (MedSpeechError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
