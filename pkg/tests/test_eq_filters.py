import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import sine
from medspeech.audio_core import AudioBuffer
from medspeech.eq_filters import (
    BUTTERWORTH_Q,
    HIGH_PASS,
    HIGH_SHELF,
    IDENTITY,
    LOW_PASS,
    BiquadCoefficients,
    EqualizerSpec,
    FilterStageSpec,
    apply_biquad,
    cascade_response,
    design_high_pass,
    design_high_shelf,
    design_low_pass,
    equalize,
    frequency_response,
)
from medspeech.errors import FrequencyOutOfRange

Q = 0.7071


def rel_close(a, b, tol=1e-12):
    return all(abs(x - y) <= tol * max(abs(y), 1e-300) for x, y in zip(a, b))


# --- design against the high-precision oracle ------------------------------


@pytest.mark.parametrize(
    "kind,design,fs,fc,gain",
    [
        ("high_pass", design_high_pass, 16000, 250, None),
        ("high_pass", design_high_pass, 44100, 250, None),
        ("low_pass", design_low_pass, 24000, 11000, None),
        ("low_pass", design_low_pass, 44100, 11000, None),
        ("high_shelf", design_high_shelf, 16000, 4000, 3.0),
        ("high_shelf", design_high_shelf, 48000, 4000, -12.0),
    ],
)
def test_design_matches_cookbook_oracle(kind, design, fs, fc, gain):
    args = (fs, fc, gain, Q) if gain is not None else (fs, fc, Q)
    c = design(*args)
    ref = oracles.cookbook_coefficients(kind, fs, fc, Q, gain or 0.0)
    assert rel_close(c.as_tuple(), ref)


def test_high_pass_examples():
    c = design_high_pass(16000, 250, Q)
    mag, _ = frequency_response(c, [250.0, 0.99 * 8000], 16000)
    assert mag[0] == pytest.approx(-3.0, abs=0.1)
    assert mag[0] == pytest.approx(-3.01, abs=0.1)
    assert mag[1] == pytest.approx(0.0, abs=0.1)
    assert abs(c.b0 + c.b1 + c.b2) <= 1e-12


def test_low_pass_examples():
    c = design_low_pass(16000, 1000, Q)
    assert c.b0 + c.b1 + c.b2 == pytest.approx(1 + c.a1 + c.a2, rel=1e-12)
    c = design_low_pass(24000, 11000, Q)
    mag, _ = frequency_response(c, [11000.0], 24000)
    assert mag[0] == pytest.approx(-3.0, abs=0.1)
    with pytest.raises(FrequencyOutOfRange):
        design_low_pass(24000, 12000, Q)
    with pytest.raises(FrequencyOutOfRange):
        design_low_pass(16000, 11000, Q)


def test_high_shelf_examples():
    flat = design_high_shelf(16000, 4000, 0.0, Q)
    f = np.geomspace(10, 7990, 200)
    mag, _ = frequency_response(flat, f, 16000)
    assert np.max(np.abs(mag)) <= 1e-9
    c = design_high_shelf(16000, 4000, 3.0, Q)
    mag, _ = frequency_response(c, [0.99 * 8000, 50.0], 16000)
    assert mag[0] == pytest.approx(3.0, abs=0.2)
    assert mag[1] == pytest.approx(0.0, abs=0.2)


def test_design_rejects_bad_inputs():
    for fc in (0.0, -5.0, 8000.0, 9000.0, math.inf, math.nan):
        with pytest.raises(FrequencyOutOfRange):
            design_high_pass(16000, fc, Q)
    with pytest.raises(ValueError):
        design_high_pass(16000, 250, 0.0)
    with pytest.raises(ValueError):
        FilterStageSpec("band_pass", 1000)


def test_analytic_response_matches_oracle():
    c = design_high_shelf(44100, 4000, 3.0, Q)
    for f in (50.0, 1000.0, 4000.0, 15000.0):
        mag, _ = frequency_response(c, [f], 44100)
        assert mag[0] == pytest.approx(oracles.response_db(c.as_tuple(), f, 44100), abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(
    st.sampled_from([8000, 11025, 16000, 22050, 44100, 48000, 96000, 192000]),
    st.floats(0.0005, 0.4995),
    st.floats(0.1, 10.0),
    st.floats(-24.0, 24.0),
    st.sampled_from([HIGH_PASS, LOW_PASS, HIGH_SHELF]),
)
def test_every_design_is_stable(fs, frac, q, gain, kind):
    c = FilterStageSpec(kind, frac * fs, q, gain).design(fs)
    assert all(math.isfinite(v) for v in c.as_tuple())
    assert c.is_stable()


def test_unstable_coefficients_detected():
    assert not BiquadCoefficients(1, 0, 0, 0, 1.0).is_stable()
    assert not BiquadCoefficients(1, 0, 0, -2.1, 0.9).is_stable()
    assert IDENTITY.is_stable()


# --- filtering --------------------------------------------------------------


def test_identity_filter_bit_exact(backend, rng):
    x = AudioBuffer(rng.uniform(-1, 1, 500), 16000)
    assert np.array_equal(apply_biquad(x, IDENTITY).samples, x.samples)


def test_zero_in_zero_out(backend):
    out = apply_biquad(AudioBuffer(np.zeros(100), 16000), design_high_pass(16000, 250))
    assert not out.samples.any()


def test_df2t_matches_direct_form_1(backend, rng):
    x = rng.uniform(-1, 1, 3000)
    c = design_high_shelf(16000, 4000, 6.0)
    ours = apply_biquad(AudioBuffer(x, 16000), c).samples
    assert np.allclose(ours, oracles.direct_form_1(x, c.as_tuple()), atol=1e-12)


def test_impulse_response_transform(backend):
    fs = 16000
    c = design_high_pass(fs, 250)
    n = 1 << 15
    h = apply_biquad(AudioBuffer(np.eye(1, n).ravel(), fs), c).samples
    H = np.fft.rfft(h)
    k = np.arange(1, n // 2)
    f = k * fs / n
    mag, phase = frequency_response(c, f, fs)
    analytic = 10 ** (mag / 20) * np.exp(1j * phase)
    # compared on the complex transfer value; dB would magnify rounding in the stop band
    assert np.max(np.abs(H[k] - analytic)) <= 1e-9


def test_linearity(backend, rng):
    x, y = rng.uniform(-1, 1, (2, 2000))
    c = design_low_pass(16000, 3000)
    f = lambda s: apply_biquad(AudioBuffer(s, 16000), c).samples
    lhs = f(0.3 * x - 1.7 * y)
    rhs = 0.3 * f(x) - 1.7 * f(y)
    assert np.sqrt(np.mean((lhs - rhs) ** 2)) <= 1e-9


def test_equalize_empty_spec_identity(backend):
    b = sine(440, 0.1)
    assert equalize(b, EqualizerSpec.empty()) == b


def test_default_spec_order():
    kinds = [(s.kind, s.frequency_hz, s.gain_db) for s in EqualizerSpec().stages]
    assert kinds == [(HIGH_PASS, 250.0, 0.0), (LOW_PASS, 11000.0, 0.0), (HIGH_SHELF, 4000.0, 3.0)]
    assert all(s.q == BUTTERWORTH_Q for s in EqualizerSpec().stages)


def test_low_pass_skipped_above_nyquist():
    assert [s.kind for s in EqualizerSpec().active_stages(16000)] == [HIGH_PASS, HIGH_SHELF]
    assert len(EqualizerSpec().active_stages(44100)) == 3


def _rms_db(a, b, skip=1600):
    return 20 * np.log10(np.sqrt(np.mean(a[skip:] ** 2)) / np.sqrt(np.mean(b[skip:] ** 2)))


def test_default_eq_kills_60hz(backend):
    x = sine(60, 2.0)
    assert _rms_db(equalize(x).samples, x.samples) <= -20


def test_default_eq_passes_1khz(backend):
    x = sine(1000, 1.0)
    assert abs(_rms_db(equalize(x).samples, x.samples)) <= 1.0


def test_cascade_is_sum_of_stages():
    fs = 44100
    coeffs = EqualizerSpec().design(fs)
    f = np.geomspace(30, 20000, 50)
    total, _ = cascade_response(coeffs, f, fs)
    parts = sum(frequency_response(c, f, fs)[0] for c in coeffs)
    assert np.allclose(total, parts, atol=1e-12)


def test_stage_order_commutes(backend, rng):
    fs = 44100
    x = AudioBuffer(rng.uniform(-0.5, 0.5, 4000), fs)
    stages = EqualizerSpec().stages
    outs = [equalize(x, EqualizerSpec(p)).samples for p in itertools.permutations(stages)]
    f = np.geomspace(30, 20000, 40)
    responses = [cascade_response(EqualizerSpec(p).design(fs), f, fs)[0] for p in itertools.permutations(stages)]
    for o, r in zip(outs[1:], responses[1:]):
        assert np.sqrt(np.mean((o - outs[0]) ** 2)) <= 1e-6
        assert np.allclose(r, responses[0], atol=1e-9)


def test_identity_response():
    mag, phase = frequency_response(IDENTITY, [10.0, 1000.0, 7999.0], 16000)
    assert not mag.any() and not phase.any()


def test_response_rejects_out_of_band():
    with pytest.raises(FrequencyOutOfRange):
        frequency_response(IDENTITY, [0.0], 16000)
    with pytest.raises(FrequencyOutOfRange):
        frequency_response(IDENTITY, [8000.0], 16000)


def test_spec_dict_roundtrip():
    spec = EqualizerSpec()
    assert EqualizerSpec.from_dict(spec.to_dict()) == spec
