"""Differentiable training objectives.

Same value semantics as the codec's evaluation functions, with explicit
stop-gradient placement: the commitment loss pulls encoder outputs toward
their (detached) quantized versions and rotation vectors toward the
(detached) encoder outputs.
"""

from __future__ import annotations

import numpy as np
import torch

from .model import stft


def mel_filterbank(num_bins: int, n_mels: int, sample_rate: int) -> np.ndarray:
    """HTK-mel triangles; empty rows fall back to their nearest center bin."""
    nyquist = sample_rate / 2.0
    freqs = np.linspace(0.0, nyquist, num_bins)
    mel_max = 2595.0 * np.log10(1.0 + nyquist / 700.0)
    points = 700.0 * (10.0 ** (np.linspace(0.0, mel_max, n_mels + 2) / 2595.0) - 1.0)
    fb = np.zeros((n_mels, num_bins))
    for m in range(n_mels):
        lo, center, hi = points[m], points[m + 1], points[m + 2]
        up = (freqs - lo) / max(center - lo, 1e-12)
        down = (hi - freqs) / max(hi - center, 1e-12)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
        if not fb[m].any():
            fb[m, int(round(center / nyquist * (num_bins - 1)))] = 1.0
    return fb


def reconstruction_loss(decoded: torch.Tensor, reference: torch.Tensor,
                        sample_rate: int, windows, mels) -> torch.Tensor:
    """Normalized magnitude+mel MAE summed over resolutions (one path)."""
    total = decoded.new_zeros(())
    for window, n_mels in zip(windows, mels):
        s_mag = torch.abs(stft(decoded, window, window // 2))
        x_mag = torch.abs(stft(reference, window, window // 2))
        fb = torch.from_numpy(mel_filterbank(s_mag.shape[1], n_mels,
                                             sample_rate)).to(s_mag.dtype)
        total = total + torch.mean(torch.abs(s_mag - x_mag)) / x_mag.mean()
        s_mel = torch.einsum("mf,bft->bmt", fb, s_mag)
        x_mel = torch.einsum("mf,bft->bmt", fb, x_mag)
        total = total + torch.mean(torch.abs(s_mel - x_mel)) / x_mel.mean()
    return total


def lsgan_d_loss(real_scores, fake_scores) -> torch.Tensor:
    terms = [torch.mean((r - 1.0) ** 2) + torch.mean(f ** 2)
             for r, f in zip(real_scores, fake_scores)]
    return torch.stack(terms).mean()


def lsgan_g_loss(fake_scores) -> torch.Tensor:
    return torch.stack([torch.mean(f ** 2) for f in fake_scores]).mean()


def feature_matching_loss(fake_feats, real_feats) -> torch.Tensor:
    per_disc = []
    for fake_layers, real_layers in zip(fake_feats, real_feats):
        terms = []
        for fs, fx in zip(fake_layers, real_layers):
            fx = fx.detach()
            terms.append(torch.mean(torch.abs(fs - fx))
                         / torch.mean(torch.abs(fx)).clamp_min(1e-12))
        per_disc.append(torch.stack(terms).mean())
    return torch.stack(per_disc).mean()


def commitment_loss(C: torch.Tensor, estimates: list[torch.Tensor]) -> torch.Tensor:
    """Eqs. of the spherical VQ commitment objective with stop-gradients.

    Term 1 and 2 stop gradients through the estimates (training the encoder
    to commit); term 3 stops the encoder side (training the rotations). The
    scalar value equals term1 + 2 * mean of the deeper-hierarchy distances.
    """
    def norms(x):
        return torch.linalg.vector_norm(x, dim=1)  # over N

    loss = norms(C - estimates[0].detach()).mean()
    if len(estimates) > 1:
        deeper = torch.stack([norms(C - e.detach()) for e in estimates[1:]])
        loss = loss + deeper.mean()
        deeper_rot = torch.stack([norms(C.detach() - e) for e in estimates[1:]])
        loss = loss + deeper_rot.mean()
    return loss
