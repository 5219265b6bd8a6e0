import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.io import wavfile

from roomdims.audio_io import (
    AudioError,
    ImpulseResponse,
    Signal,
    convolve,
    fft_convolve,
    read_wav,
    synth_exponential_ir,
    write_wav,
)


def direct_convolution(x, h):
    """Textbook O(N*M) sum, independent of any FFT."""
    y = np.zeros(len(x) + len(h) - 1)
    for k, hk in enumerate(h):
        y[k:k + len(x)] += hk * x
    return y


class TestSignal:
    def test_samples_are_read_only(self):
        s = Signal(np.zeros(10), 48000)
        with pytest.raises(ValueError):
            s.samples[0] = 1.0

    def test_mono_shape(self):
        s = Signal(np.arange(5.0), 8000)
        assert s.samples.shape == (1, 5)
        assert s.duration == pytest.approx(5 / 8000)

    @pytest.mark.parametrize("bad", [np.zeros((3, 10)), np.zeros(0), np.array([0.0, np.nan])])
    def test_rejects_malformed(self, bad):
        with pytest.raises(AudioError):
            Signal(bad, 48000)

    def test_silent_ir_rejected(self):
        with pytest.raises(AudioError, match="silent"):
            ImpulseResponse(Signal(np.zeros(100), 48000), "x")


class TestWav:
    def test_float_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        x = rng.uniform(-1, 1, (2, 4000)).astype(np.float32).astype(np.float64)
        write_wav(Signal(x, 44100), tmp_path / "a.wav")
        back = read_wav(tmp_path / "a.wav")
        assert back.sample_rate == 44100
        np.testing.assert_array_equal(back.samples, x)

    def test_float64_keeps_full_precision(self, tmp_path):
        x = np.random.default_rng(2).standard_normal(1000) * 0.1
        write_wav(Signal(x, 48000), tmp_path / "a.wav", dtype="float64")
        np.testing.assert_array_equal(read_wav(tmp_path / "a.wav").mono(), x)

    def test_int16_scaling(self, tmp_path):
        wavfile.write(tmp_path / "i.wav", 48000, np.array([32767, -32768, 0], dtype=np.int16))
        x = read_wav(tmp_path / "i.wav").mono()
        assert x[0] == 32767 / 32768
        assert x[1] == -1.0
        assert x[2] == 0.0

    def test_three_channels_rejected(self, tmp_path):
        wavfile.write(tmp_path / "c.wav", 48000, np.zeros((10, 3), dtype=np.int16))
        with pytest.raises(AudioError, match="channel"):
            read_wav(tmp_path / "c.wav")

    def test_zero_length_rejected(self, tmp_path):
        wavfile.write(tmp_path / "z.wav", 48000, np.zeros(0, dtype=np.int16))
        with pytest.raises(AudioError):
            read_wav(tmp_path / "z.wav")

    @pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
    def test_unwritable_directory(self, tmp_path):
        d = tmp_path / "ro"
        d.mkdir()
        d.chmod(0o500)
        try:
            with pytest.raises(AudioError):
                write_wav(Signal(np.ones(4), 48000), d / "x.wav")
        finally:
            d.chmod(0o700)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(AudioError):
            write_wav(Signal(np.ones(4), 48000), tmp_path / "nope" / "x.wav")


class TestConvolution:
    def test_matches_direct_sum(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.standard_normal(rng.integers(1, 300))
            h = rng.standard_normal(rng.integers(1, 200))
            ref = direct_convolution(x, h)
            np.testing.assert_allclose(fft_convolve(x, h), ref, rtol=0, atol=1e-9 * np.abs(ref).max())

    def test_identity_and_shift(self):
        x = np.random.default_rng(4).standard_normal(257)
        dry = Signal(x, 48000)
        out = convolve(dry, ImpulseResponse(Signal([1.0], 48000), "id")).mono()
        np.testing.assert_allclose(out, x, atol=1e-12)
        h = np.zeros(11)
        h[10] = 1.0
        out = convolve(dry, ImpulseResponse(Signal(h, 48000), "shift")).mono()
        np.testing.assert_allclose(out[10:], x, atol=1e-12)
        np.testing.assert_allclose(out[:10], 0.0, atol=1e-12)

    def test_binaural_output(self):
        ir = synth_exponential_ir(0.3, 0.2, channels=2)
        out = convolve(Signal(np.ones(100), 48000), ir)
        assert out.channels == 2
        assert out.n_samples == 100 + ir.signal.n_samples - 1

    def test_rate_mismatch(self):
        ir = synth_exponential_ir(0.3, 0.1, sample_rate=44100)
        with pytest.raises(AudioError, match="sample-rate"):
            convolve(Signal(np.ones(10), 48000), ir)

    def test_stereo_dry_rejected(self):
        ir = synth_exponential_ir(0.3, 0.1)
        with pytest.raises(AudioError, match="mono"):
            convolve(Signal(np.ones((2, 10)), 48000), ir)

    @settings(max_examples=30, deadline=None)
    @given(a=st.floats(-10, 10), b=st.floats(-10, 10), seed=st.integers(0, 2**31))
    def test_linearity(self, a, b, seed):
        rng = np.random.default_rng(seed)
        x1, x2 = rng.standard_normal((2, 64))
        h = rng.standard_normal(33)
        lhs = fft_convolve(a * x1 + b * x2, h)
        rhs = a * fft_convolve(x1, h) + b * fft_convolve(x2, h)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + abs(a) + abs(b)) * 64)


class TestSyntheticIR:
    def test_peak_normalised_and_seeded(self):
        a = synth_exponential_ir(1.0, 0.5, seed=5)
        b = synth_exponential_ir(1.0, 0.5, seed=5)
        assert np.abs(a.signal.samples).max() == 1.0
        np.testing.assert_array_equal(a.signal.samples, b.signal.samples)

    def test_energy_halves_follow_envelope(self):
        # energy after t over energy before t follows the squared envelope
        t60, dur, sr = 1.0, 2.0, 48000
        x = synth_exponential_ir(t60, dur, sample_rate=sr, seed=0).signal.mono()
        half = int(0.5 * sr)
        k = 6 * np.log(10) / t60
        expected = (np.exp(-k * 0.5) - np.exp(-k * dur)) / (1 - np.exp(-k * 0.5))
        measured = np.sum(x[half:] ** 2) / np.sum(x[:half] ** 2)
        assert measured == pytest.approx(expected, rel=0.1)
