"""Per-subband gain-shape feature extraction and embedding.

A complex subband frame x of G bins becomes a (2G+1)-vector
[Re(x)/|x|, Im(x)/|x|, log|x|]: a unit-norm "shape" carrying the content and
a scalar log "gain" carrying the energy. The vector is standardized per frame
(rescaled mean-variance normalization with learned per-band affine factors)
and mapped by a per-band linear layer to the N-dimensional embedding space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import SubbandSpectrogram
from .errors import ShapeError

NORM_FLOOR = 1e-8  # clamp for silent frames, keeps the log-gain finite


@dataclass
class RmvnParams:
    alpha: np.ndarray
    beta: np.ndarray
    eps: float = 1e-5


@dataclass
class BandFrontendParams:
    rmvn: RmvnParams
    weight: np.ndarray  # (N, 2G+1)
    bias: np.ndarray    # (N,)


@dataclass
class FrontendParams:
    bands: list[BandFrontendParams]


def gain_shape(frame: np.ndarray) -> np.ndarray:
    """Gain-shape vector(s) of complex frame(s); last axis is the bin axis.

    Accepts (..., G) complex input and returns (..., 2G+1) real output.
    """
    frame = np.asarray(frame, dtype=np.complex128)
    norm = np.maximum(np.linalg.norm(frame, axis=-1, keepdims=True), NORM_FLOOR)
    return np.concatenate(
        [frame.real / norm, frame.imag / norm, np.log(norm)], axis=-1)


def inverse_gain_shape(g: np.ndarray) -> np.ndarray:
    """Algebraic inverse of gain_shape: (shape_re + i*shape_im) * exp(log_gain)."""
    g = np.asarray(g, dtype=np.float64)
    if g.shape[-1] % 2 != 1:
        raise ShapeError("gain-shape vectors have odd length 2G+1")
    G = g.shape[-1] // 2
    gain = np.exp(g[..., -1:])
    return (g[..., :G] + 1j * g[..., G:2 * G]) * gain


def rmvn(g: np.ndarray, alpha: np.ndarray, beta: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Rescaled mean-variance normalization over the last axis.

    Statistics are per-vector (population variance); alpha/beta are learned
    elementwise rescaling factors.
    """
    g = np.asarray(g, dtype=np.float64)
    mean = g.mean(axis=-1, keepdims=True)
    var = g.var(axis=-1, keepdims=True)
    return (g - mean) / np.sqrt(var + eps) * alpha + beta


def embed_subbands(subbands: SubbandSpectrogram, params: FrontendParams,
                   k_hat: int) -> np.ndarray:
    """Embed the first k_hat subbands into an (N, k_hat, T) tensor."""
    if k_hat > len(params.bands) or k_hat > subbands.num_bands:
        raise ShapeError(f"k_hat={k_hat} exceeds available bands")
    cols = []
    for k in range(k_hat):
        band = subbands.bands[k]  # (G_k, T)
        p = params.bands[k]
        if p.weight.shape[1] != 2 * band.shape[0] + 1:
            raise ShapeError(f"band {k}: embedding expects {p.weight.shape[1]} features, "
                             f"frame gives {2 * band.shape[0] + 1}")
        g = gain_shape(band.T)                          # (T, 2G+1)
        normed = rmvn(g, p.rmvn.alpha, p.rmvn.beta, p.rmvn.eps)
        cols.append(normed @ p.weight.T + p.bias)       # (T, N)
    return np.stack(cols, axis=1).T                     # (N, k_hat, T)
