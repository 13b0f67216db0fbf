"""Call-audio conditioning, augmentation, dataset conversion and WER scoring
for a two-stage (ASR -> LLM) medical speech pipeline."""

from .audio_core import AudioBuffer, SignalStats, downmix_mono, load_wav, resample, save_wav, signal_stats
from .augment import add_white_noise, hard_clip, measure_snr
from .denoiser import GateConfig, NoiseProfile, denoise, estimate_noise_profile, spectral_gate
from .eq_filters import (
    BiquadCoefficients,
    EqualizerSpec,
    FilterStageSpec,
    apply_biquad,
    design_high_pass,
    design_high_shelf,
    design_low_pass,
    equalize,
    frequency_response,
)
from .wer import WerBreakdown, WordSequence, corpus_wer, normalize_tokens, wer

__version__ = "0.1.0"
