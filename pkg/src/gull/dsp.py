"""Sample-rate conversion, STFT/ISTFT, and subband split/merge.

Framing is causal: frame t covers samples [t*hop, t*hop + window) with no
look-back padding, so frame t depends only on samples below t*hop + window
and the analysis latency is one window (20 ms). Analysis and synthesis both
use a periodic square-root Hann window; at 50% overlap the product windows
overlap-add to unity, giving perfect reconstruction away from the stream edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy.signal import resample_poly

from .config import BandLayout, ModelConfig
from .errors import ShapeError

# Kaiser beta for the polyphase anti-aliasing filter; ~90 dB stopband.
_KAISER_BETA = 9.0


@dataclass
class AudioBuffer:
    samples: np.ndarray  # float64, shape (n,)
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ShapeError("AudioBuffer holds mono audio only")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class Spectrogram:
    bins: np.ndarray  # complex128, shape (F, T)
    window_ms: int
    hop_ms: int
    sample_rate: int

    @property
    def num_bins(self) -> int:
        return self.bins.shape[0]

    @property
    def num_frames(self) -> int:
        return self.bins.shape[1]


@dataclass
class SubbandSpectrogram:
    bands: list[np.ndarray]  # k-th entry complex128, shape (G_k, T)

    @property
    def num_bands(self) -> int:
        return len(self.bands)

    @property
    def num_frames(self) -> int:
        return self.bands[0].shape[1] if self.bands else 0


def resample(audio: AudioBuffer, target_sr: int) -> AudioBuffer:
    """Polyphase windowed-sinc resampling to ``target_sr``."""
    if target_sr <= 0:
        raise ShapeError("target_sr must be positive")
    if target_sr == audio.sample_rate or len(audio.samples) == 0:
        return AudioBuffer(audio.samples.copy(), target_sr)
    g = gcd(audio.sample_rate, target_sr)
    out = resample_poly(audio.samples, target_sr // g, audio.sample_rate // g,
                        window=("kaiser", _KAISER_BETA))
    return AudioBuffer(out, target_sr)


def sqrt_hann(window_size: int) -> np.ndarray:
    """Periodic square-root Hann window."""
    return np.sqrt(0.5 - 0.5 * np.cos(2 * np.pi * np.arange(window_size) / window_size))


def frame_count(num_samples: int, hop_size: int) -> int:
    return int(np.ceil(num_samples / hop_size)) if num_samples else 0


def stft(audio: AudioBuffer, config: ModelConfig) -> Spectrogram:
    """Causal STFT at the operating rate; T = ceil(len/hop) frames."""
    if audio.sample_rate != config.operating_sr:
        raise ShapeError(
            f"stft expects audio at the operating rate {config.operating_sr}, "
            f"got {audio.sample_rate}"
        )
    win, hop = config.window_size, config.hop_size
    n = len(audio.samples)
    T = frame_count(n, hop)
    padded = np.zeros((T - 1) * hop + win if T else win)
    padded[:n] = audio.samples
    idx = hop * np.arange(T)[:, None] + np.arange(win)[None, :]
    frames = padded[idx] * sqrt_hann(win)[None, :]
    return Spectrogram(np.fft.rfft(frames, axis=1).T, config.window_ms,
                       config.hop_ms, config.operating_sr)


def istft(spec: Spectrogram, config: ModelConfig) -> AudioBuffer:
    """Overlap-add synthesis; output length is exactly T*hop samples."""
    win, hop = config.window_size, config.hop_size
    if spec.num_bins != config.num_bins:
        raise ShapeError(f"spectrogram has {spec.num_bins} bins, expected {config.num_bins}")
    T = spec.num_frames
    if T == 0:
        return AudioBuffer(np.zeros(0), config.operating_sr)
    w = sqrt_hann(win)
    frames = np.fft.irfft(spec.bins.T, n=win, axis=1) * w[None, :]
    out = np.zeros((T - 1) * hop + win)
    wsum = np.zeros_like(out)
    for t in range(T):
        out[t * hop:t * hop + win] += frames[t]
        wsum[t * hop:t * hop + win] += w * w
    out /= np.maximum(wsum, 1e-8)
    return AudioBuffer(out[:T * hop], config.operating_sr)


def split_bands(spec: Spectrogram | np.ndarray, layout: BandLayout) -> SubbandSpectrogram:
    """Slice the frequency axis into the layout's subbands (lossless partition)."""
    bins = spec.bins if isinstance(spec, Spectrogram) else np.asarray(spec)
    if bins.shape[0] != layout.total_bins:
        raise ShapeError(f"spectrogram has {bins.shape[0]} bins, layout needs {layout.total_bins}")
    bands, offset = [], 0
    for g in layout.bin_counts:
        bands.append(bins[offset:offset + g].copy())
        offset += g
    return SubbandSpectrogram(bands)


def merge_bands(subbands: SubbandSpectrogram, layout: BandLayout) -> np.ndarray:
    """Exact inverse of split_bands; returns the (F, T) complex matrix."""
    if subbands.num_bands != layout.num_bands:
        raise ShapeError(f"got {subbands.num_bands} bands, layout has {layout.num_bands}")
    for k, (band, g) in enumerate(zip(subbands.bands, layout.bin_counts)):
        if band.shape[0] != g:
            raise ShapeError(f"band {k} has {band.shape[0]} rows, expected {g}")
    return np.concatenate(subbands.bands, axis=0)
