"""Compare the numba and numpy kernel backends on realistic inputs.

    python3 benchmarks/bench_kernels.py --seconds 10 --repeat 5

Each kernel is driven through its public wrapper (``equalize``, ``resample``,
``spectral_gate``, ``wer``). The first numba call is timed separately because
it includes JIT compilation (or loading the on-disk cache). Outputs of the two
backends are compared and the largest difference is printed.
"""
import argparse
import time

import numpy as np

from medspeech import _accel
from medspeech.audio_core import AudioBuffer, resample
from medspeech.denoiser import GateConfig, estimate_noise_profile, spectral_gate
from medspeech.eq_filters import equalize
from medspeech.wer import wer


def _counts(b):
    return np.array([b.substitutions, b.deletions, b.insertions, b.hits], dtype=float)


def make_cases(seconds, fs, seed):
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * fs)) / fs
    x = 0.5 * np.sin(2 * np.pi * 440 * t) + 0.05 * rng.standard_normal(t.size)
    audio = AudioBuffer(x, fs)
    profile = estimate_noise_profile(audio)
    words = [f"w{i}" for i in range(20)]
    ref = list(rng.choice(words, 400))
    hyp = list(rng.choice(words, 380))
    return {
        "biquad": lambda: equalize(audio).samples,
        "resample": lambda: resample(audio, 22050).samples,
        "gate": lambda: spectral_gate(audio, profile, GateConfig()).samples,
        "edit_counts": lambda: _counts(wer(ref, hyp)),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seconds", type=float, default=10.0, help="signal length in seconds")
    p.add_argument("--fs", type=int, default=16000, help="sample rate in Hz")
    p.add_argument("--repeat", type=int, default=5, help="timed repetitions per kernel (count)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (integer)")
    args = p.parse_args(argv)

    cases = make_cases(args.seconds, args.fs, args.seed)
    backends = _accel.available_backends()
    if "numba" not in backends:
        print("numba not installed; timing the numpy backend only")
    print(f"{'kernel':<12} {'backend':<7} {'first s':>9} {'best s':>9} {'speedup':>8} {'max |diff|':>11}")
    try:
        for name, fn in cases.items():
            results = {}
            for backend in backends:
                _accel.set_backend(backend)
                t0 = time.perf_counter()
                out = fn()
                first = time.perf_counter() - t0
                results[backend] = (first, best_of(fn, args.repeat), out)
            ref_time = results["numpy"][1]
            for backend, (first, best, out) in results.items():
                diff = float(np.max(np.abs(out - results["numpy"][2]))) if out.size else 0.0
                print(f"{name:<12} {backend:<7} {first:9.4f} {best:9.4f} {ref_time / best:7.1f}x {diff:11.2e}")
    finally:
        _accel.set_backend(_accel.BACKEND)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
