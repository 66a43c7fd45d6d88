import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gull import config as cfg
from gull.dsp import (AudioBuffer, Spectrogram, istft, merge_bands, resample,
                      split_bands, stft)
from gull.errors import ShapeError


def chirp(n, sr, f0=100.0, f1=None, seed=None):
    f1 = f1 or sr / 2 * 0.8
    t = np.arange(n) / sr
    phase = 2 * np.pi * (f0 * t + (f1 - f0) / (2 * t[-1]) * t ** 2)
    return np.sin(phase)


class TestResample:
    def test_zeros(self):
        out = resample(AudioBuffer(np.zeros(48000), 48000), 16000)
        assert out.sample_rate == 16000
        assert np.allclose(out.samples, 0)
        assert abs(len(out.samples) - 16000) <= 1

    def test_empty(self):
        out = resample(AudioBuffer(np.zeros(0), 48000), 16000)
        assert len(out.samples) == 0

    def test_sine_upsample_snr(self):
        t = np.arange(8000) / 8000
        out = resample(AudioBuffer(np.sin(2 * np.pi * 1000 * t), 8000), 48000)
        t48 = np.arange(len(out.samples)) / 48000
        ref = np.sin(2 * np.pi * 1000 * t48)
        trim = 2400  # skip filter transients at both edges
        err = out.samples[trim:-trim] - ref[trim:-trim]
        snr = 10 * np.log10(np.sum(ref[trim:-trim] ** 2) / np.sum(err ** 2))
        assert snr >= 40.0

    def test_stopband_attenuation(self):
        t = np.arange(48000) / 48000
        x = np.sin(2 * np.pi * 23000 * t)
        out = resample(AudioBuffer(x, 48000), 16000)
        assert np.sqrt(np.mean(out.samples ** 2)) <= 1e-3 * np.sqrt(np.mean(x ** 2))

    def test_duration_preserved(self):
        out = resample(AudioBuffer(np.random.default_rng(0).standard_normal(44100), 44100), 16000)
        assert abs(len(out.samples) - 16000) <= 1


class TestStft:
    def test_zeros(self, speech_config):
        spec = stft(AudioBuffer(np.zeros(48000), 48000), speech_config)
        assert spec.bins.shape == (481, 100)
        assert np.all(spec.bins == 0)

    def test_sine_peak_bin(self, speech_config):
        t = np.arange(48000) / 48000
        spec = stft(AudioBuffer(np.sin(2 * np.pi * 1000 * t), 48000), speech_config)
        mags = np.abs(spec.bins[:, 10:90])
        assert np.all(np.argmax(mags, axis=0) == 20)  # 1 kHz on the 50 Hz grid

    def test_hundred_frames_per_second(self, speech_config, music_config):
        for config in (speech_config, music_config):
            spec = stft(AudioBuffer(np.zeros(config.operating_sr), config.operating_sr), config)
            assert spec.num_frames == 100

    def test_rate_mismatch_rejected(self, speech_config):
        with pytest.raises(ShapeError):
            stft(AudioBuffer(np.zeros(100), 16000), speech_config)

    def test_linearity(self, speech_config):
        rng = np.random.default_rng(1)
        x, y = rng.standard_normal(24000), rng.standard_normal(24000)
        sx = stft(AudioBuffer(x, 48000), speech_config).bins
        sy = stft(AudioBuffer(y, 48000), speech_config).bins
        sxy = stft(AudioBuffer(2.5 * x - 0.7 * y, 48000), speech_config).bins
        ref = 2.5 * sx - 0.7 * sy
        assert np.max(np.abs(sxy - ref)) <= 1e-6 * max(np.max(np.abs(ref)), 1.0)

    def test_causal_framing(self, speech_config):
        # frame t must not change when samples at or beyond t*hop+window change
        rng = np.random.default_rng(2)
        x = rng.standard_normal(24000)
        y = x.copy()
        t_probe = 20
        boundary = t_probe * speech_config.hop_size + speech_config.window_size
        y[boundary:] += rng.standard_normal(len(y) - boundary)
        sx = stft(AudioBuffer(x, 48000), speech_config).bins
        sy = stft(AudioBuffer(y, 48000), speech_config).bins
        assert np.array_equal(sx[:, :t_probe + 1], sy[:, :t_probe + 1])


class TestIstft:
    def test_zero_spec(self, speech_config):
        spec = Spectrogram(np.zeros((481, 50), dtype=complex), 20, 10, 48000)
        out = istft(spec, speech_config)
        assert np.all(out.samples == 0)
        assert len(out.samples) == 50 * 480

    @pytest.mark.parametrize("signal", ["noise", "chirp"])
    def test_roundtrip_snr(self, speech_config, signal):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(48000) if signal == "noise" else chirp(48000, 48000)
        out = istft(stft(AudioBuffer(x, 48000), speech_config), speech_config)
        e = speech_config.window_size // 2
        err = out.samples[e:len(x) - e] - x[e:-e]
        snr = 10 * np.log10(np.sum(x[e:-e] ** 2) / np.sum(err ** 2))
        assert snr >= 60.0

    def test_roundtrip_music_rate(self, music_config):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(44100)
        out = istft(stft(AudioBuffer(x, 44100), music_config), music_config)
        e = music_config.window_size // 2
        err = out.samples[e:len(x) - e] - x[e:-e]
        assert 10 * np.log10(np.sum(x[e:-e] ** 2) / np.sum(err ** 2)) >= 60.0


class TestBands:
    def test_split_shapes(self, speech_config):
        spec = np.arange(481 * 7).reshape(481, 7).astype(complex)
        bands = split_bands(spec, speech_config.band_layout)
        assert bands.bands[0].shape == (41, 7)
        assert bands.bands[-1].shape == (80, 7)

    def test_merge_inverts_split(self, speech_config, music_config):
        rng = np.random.default_rng(5)
        for config in (speech_config, music_config):
            spec = rng.standard_normal((config.num_bins, 9)) \
                + 1j * rng.standard_normal((config.num_bins, 9))
            merged = merge_bands(split_bands(spec, config.band_layout), config.band_layout)
            assert np.array_equal(merged, spec)

    def test_single_band_identity(self):
        layout = cfg.BandLayout((81,), ((0, 4000),))
        spec = np.random.default_rng(6).standard_normal((81, 4)).astype(complex)
        bands = split_bands(spec, layout)
        assert len(bands.bands) == 1
        assert np.array_equal(bands.bands[0], spec)

    def test_mismatch_rejected(self, speech_config):
        with pytest.raises(ShapeError):
            split_bands(np.zeros((80, 3), dtype=complex), speech_config.band_layout)

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_split_merge_bijection_property(self, seed):
        config = cfg.build_config("speech")
        rng = np.random.default_rng(seed)
        spec = rng.standard_normal((481, 3)) + 1j * rng.standard_normal((481, 3))
        merged = merge_bands(split_bands(spec, config.band_layout), config.band_layout)
        assert np.array_equal(merged, spec)
