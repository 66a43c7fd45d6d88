"""Training-objective values and the STFT discriminator forward pass.

Everything here is deterministic evaluation: multi-resolution spectral
discriminators (stacked bias-free 3x3 convolutions with spectral
normalization and leaky ReLU), least-squares GAN losses, the normalized
magnitude/mel reconstruction loss at seven STFT resolutions, layer-wise
feature matching, and the weighted total. Gradient-based training is an
external concern; these functions exist for quality reporting and for
value parity with whatever trainer produced the weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dsp import sqrt_hann
from .errors import GullError, ShapeError
from .weights import DISC_CHANNELS, DISC_WINDOWS, ParamStore

LEAKY_SLOPE = 0.2
COMMIT_WEIGHT = 0.2

RECON_WINDOWS = (32, 64, 128, 256, 512, 1024, 2048)
RECON_MEL_BANDS = (5, 10, 20, 40, 80, 160, 320)


# ---------------------------------------------------------------------------
# mel filterbank

def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(num_bins: int, n_mels: int, sample_rate: int) -> np.ndarray:
    """Triangular HTK-mel filters (n_mels, num_bins) spanning 0..Nyquist.

    Any band whose triangle falls between bins gets a single unit weight at
    the bin nearest its center, so every row stays non-zero.
    """
    nyquist = sample_rate / 2.0
    freqs = np.linspace(0.0, nyquist, num_bins)
    points = mel_to_hz(np.linspace(0.0, float(hz_to_mel(nyquist)), n_mels + 2))
    fb = np.zeros((n_mels, num_bins))
    for m in range(n_mels):
        lo, center, hi = points[m], points[m + 1], points[m + 2]
        up = (freqs - lo) / max(center - lo, 1e-12)
        down = (hi - freqs) / max(hi - center, 1e-12)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
        if not fb[m].any():
            fb[m, int(round(center / nyquist * (num_bins - 1)))] = 1.0
    return fb


def _frame_spectrogram(x: np.ndarray, window: int) -> np.ndarray:
    """Causal STFT magnitude-ready complex frames at hop = window/2."""
    hop = window // 2
    n = len(x)
    T = max(int(np.ceil(n / hop)), 1)
    padded = np.zeros((T - 1) * hop + window)
    padded[:n] = x
    idx = hop * np.arange(T)[:, None] + np.arange(window)[None, :]
    frames = padded[idx] * sqrt_hann(window)[None, :]
    return np.fft.rfft(frames, axis=1).T  # (window//2+1, T)


# ---------------------------------------------------------------------------
# discriminator

@dataclass
class ConvBlockParams:
    weight: np.ndarray   # (C_out, C_in, 3, 3), bias-free
    sn_u: np.ndarray     # (C_out,) persisted power-iteration estimate
    stride: tuple[int, int]


@dataclass
class DiscriminatorParams:
    window: int
    blocks: list[ConvBlockParams]
    score_weight: np.ndarray  # (1, C_last, 1, 1)
    score_sn_u: np.ndarray


def discriminator_stack(store: ParamStore, window: int) -> DiscriminatorParams:
    blocks = []
    for i in range(len(DISC_CHANNELS)):
        blocks.append(ConvBlockParams(
            weight=store.get_f64(f"disc.r{window}.block{i}.weight"),
            sn_u=store.get_f64(f"disc.r{window}.block{i}.sn_u"),
            stride=(1, 1) if i % 2 == 0 else (2, 2),
        ))
    return DiscriminatorParams(
        window=window,
        blocks=blocks,
        score_weight=store.get_f64(f"disc.r{window}.score.weight"),
        score_sn_u=store.get_f64(f"disc.r{window}.score.sn_u"),
    )


def spectral_normalize(weight: np.ndarray, u: np.ndarray) -> np.ndarray:
    """One power-iteration estimate of the spectral norm from the stored u."""
    mat = weight.reshape(weight.shape[0], -1)
    v = mat.T @ u
    v /= max(np.linalg.norm(v), 1e-12)
    u_new = mat @ v
    u_new /= max(np.linalg.norm(u_new), 1e-12)
    sigma = float(u_new @ mat @ v)
    return weight / max(sigma, 1e-12)


def conv2d(x: np.ndarray, weight: np.ndarray, stride: tuple[int, int],
           padding: int = 1) -> np.ndarray:
    """Cross-correlation of x (C_in, H, W) with weight (C_out, C_in, kh, kw)."""
    c_out, c_in, kh, kw = weight.shape
    if x.shape[0] != c_in:
        raise ShapeError(f"conv input has {x.shape[0]} channels, kernel wants {c_in}")
    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))     # (C_in, H', W', kh, kw)
    windows = windows[:, ::stride[0], ::stride[1]]
    return np.tensordot(weight, windows, axes=([1, 2, 3], [0, 3, 4]))


def leaky_relu(x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def discriminator_forward(spec: np.ndarray, params: DiscriminatorParams):
    """Score map and the 6 hidden feature maps for one complex spectrogram.

    ``spec`` holds the valid frequency bands only. The real/imaginary parts
    are stacked as two channels and the tensor is normalized to unit L2
    energy, making the scores insensitive to input scale.
    """
    spec = np.asarray(spec)
    if spec.ndim != 2:
        raise ShapeError("discriminator input must be a (F', T) spectrogram")
    x = np.stack([spec.real, spec.imag]).astype(np.float64)
    x = x / max(np.linalg.norm(x), 1e-12)
    feats = []
    for block in params.blocks:
        w = spectral_normalize(block.weight, block.sn_u)
        x = leaky_relu(conv2d(x, w, block.stride))
        feats.append(x)
    w = spectral_normalize(params.score_weight, params.score_sn_u)
    score = np.tensordot(w[:, :, 0, 0], x, axes=([1], [0]))
    return score, feats


def multi_resolution_forward(signal: np.ndarray, store: ParamStore,
                             valid_bins_ratio: float = 1.0):
    """Run all five discriminators on a waveform; returns (scores, features)."""
    scores, feats = [], []
    for window in DISC_WINDOWS:
        spec = _frame_spectrogram(np.asarray(signal, dtype=np.float64), window)
        keep = max(int(round(spec.shape[0] * valid_bins_ratio)), 1)
        s, f = discriminator_forward(spec[:keep], discriminator_stack(store, window))
        scores.append(s)
        feats.append(f)
    return scores, feats


# ---------------------------------------------------------------------------
# loss values

def lsgan_losses(real_scores, fake_scores) -> tuple[float, float]:
    """LSGAN discriminator and generator losses for one decoder path.

    Accepts single score maps or per-discriminator sequences; values are
    averaged across discriminators. Multi-path objectives sum per-path calls.
    """
    real_list = _as_list(real_scores)
    fake_list = _as_list(fake_scores)
    if len(real_list) != len(fake_list):
        raise ShapeError("need matching real/fake score counts")
    d_terms = [float(np.mean((r - 1.0) ** 2) + np.mean(f ** 2))
               for r, f in zip(real_list, fake_list)]
    g_terms = [float(np.mean(f ** 2)) for f in fake_list]
    return float(np.mean(d_terms)), float(np.mean(g_terms))


def _as_list(x):
    if isinstance(x, np.ndarray):
        return [x]
    return [np.asarray(a, dtype=np.float64) for a in x]


def magnitude_mae(s_spec: np.ndarray, x_spec: np.ndarray) -> float:
    """MAE between magnitudes, normalized by the reference's mean magnitude."""
    s_mag, x_mag = np.abs(s_spec), np.abs(x_spec)
    ref = float(x_mag.mean())
    if ref <= 0.0:
        raise GullError("reconstruction loss undefined for zero-energy reference")
    return float(np.mean(np.abs(s_mag - x_mag)) / ref)


def mel_mae(s_spec: np.ndarray, x_spec: np.ndarray, fb: np.ndarray) -> float:
    s_mel = fb @ np.abs(s_spec)
    x_mel = fb @ np.abs(x_spec)
    ref = float(x_mel.mean())
    if ref <= 0.0:
        raise GullError("mel loss undefined for zero-energy reference")
    return float(np.mean(np.abs(s_mel - x_mel)) / ref)


def reconstruction_loss(decoded: np.ndarray, reference: np.ndarray,
                        sample_rate: int) -> float:
    """Seven-resolution normalized magnitude + mel MAE for one decoder path.

    Operates on time-domain signals, re-analyzed at windows 32..2048 with
    50% hops; each resolution contributes a magnitude term and a mel term.
    """
    decoded = np.asarray(decoded, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if decoded.shape != reference.shape:
        raise ShapeError("decoded/reference length mismatch")
    total = 0.0
    for window, n_mels in zip(RECON_WINDOWS, RECON_MEL_BANDS):
        s_spec = _frame_spectrogram(decoded, window)
        x_spec = _frame_spectrogram(reference, window)
        fb = mel_filterbank(s_spec.shape[0], n_mels, sample_rate)
        total += magnitude_mae(s_spec, x_spec) + mel_mae(s_spec, x_spec, fb)
    return total


def spectral_distances(decoded: np.ndarray, reference: np.ndarray) -> dict[int, float]:
    """Per-resolution normalized magnitude MAE, for metric reporting."""
    out = {}
    for window in RECON_WINDOWS:
        out[window] = magnitude_mae(_frame_spectrogram(np.asarray(decoded, np.float64), window),
                                    _frame_spectrogram(np.asarray(reference, np.float64), window))
    return out


def feature_matching_loss(fake_feats, real_feats) -> float:
    """Layer-normalized MAE between hidden features for one decoder path.

    Inputs are per-discriminator lists of per-layer feature maps; each layer
    term is normalized by the mean absolute real feature, averaged over the
    layers of each discriminator and then across discriminators.
    """
    if len(fake_feats) != len(real_feats):
        raise ShapeError("need matching discriminator counts")
    per_disc = []
    for fake_layers, real_layers in zip(fake_feats, real_feats):
        if len(fake_layers) != len(real_layers):
            raise ShapeError("need matching layer counts")
        terms = []
        for fs, fx in zip(fake_layers, real_layers):
            ref = float(np.mean(np.abs(fx)))
            terms.append(float(np.mean(np.abs(np.asarray(fs) - np.asarray(fx)))) / max(ref, 1e-12))
        per_disc.append(float(np.mean(terms)))
    return float(np.mean(per_disc))


def total_generator_loss(reconstruction: float, feature_matching: float,
                         adversarial: float, commitment: float,
                         commit_weight: float = COMMIT_WEIGHT) -> float:
    return float(reconstruction + feature_matching + adversarial
                 + commit_weight * commitment)
