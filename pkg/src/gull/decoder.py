"""Elastic band-split RNN decoder, reconstruction heads, and decode pipeline.

Every elastic layer owns W parallel output slots. At inference the caller
picks a width w <= W; a transform-average-concatenate (TAC) module turns the
first w auxiliary slot features into a softmax weighting, and the layer's
residual branch is the weighted sum of the first w primary slots. Because the
average inside TAC runs over exactly the active slots, the weights (and thus
the output) are width-dependent. Depth works by early exit: depth d runs only
the first d blocks. Neither choice touches the bitstream, so one encoded
stream serves every (w, d) operating point.

Reconstruction maps each decoded band embedding through a per-band linear
head with a GLU nonlinearity to the real and imaginary parts of that band's
spectrogram rows; bands above the target count stay zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import BandLayout
from .dsp import SubbandSpectrogram, merge_bands
from .encoder import LstmParams, lstm_scan
from .errors import ShapeError
from .frontend import RmvnParams, rmvn


@dataclass
class TacParams:
    u_weight: np.ndarray  # (tac_hidden, V)
    u_bias: np.ndarray    # (tac_hidden,)
    q_weight: np.ndarray  # (tac_hidden, tac_hidden)
    q_bias: np.ndarray    # (tac_hidden,)
    b_weight: np.ndarray  # (1, 2*tac_hidden)
    b_bias: np.ndarray    # (1,)


@dataclass
class ElasticLayerParams:
    rmvn: RmvnParams
    cell: LstmParams
    head_weight: np.ndarray  # ((N+V)*W, M)
    head_bias: np.ndarray    # ((N+V)*W,)
    tac: TacParams
    embed_dim: int           # N
    width: int               # W


@dataclass
class ElasticBlockParams:
    time: ElasticLayerParams
    band: ElasticLayerParams


@dataclass
class ReconHeadParams:
    """Per-band GLU heads: weight (2*(2*G_k), N), bias (2*(2*G_k),)."""
    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class DecoderState:
    """Per-block streaming state of time-direction cells, shape (K_bar, M)."""
    hidden: list[np.ndarray] = field(default_factory=list)
    cell: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def zeros(cls, num_blocks: int, k_bar: int, hidden_size: int) -> "DecoderState":
        return cls([np.zeros((k_bar, hidden_size)) for _ in range(num_blocks)],
                   [np.zeros((k_bar, hidden_size)) for _ in range(num_blocks)])


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def tac_weights(d_feats: np.ndarray, tac: TacParams, w: int) -> np.ndarray:
    """Width-dependent softmax weights over the first w slots.

    d_feats is (..., W, V); the result is (..., w), positive, summing to 1.
    """
    d_feats = np.asarray(d_feats, dtype=np.float64)
    W = d_feats.shape[-2]
    if not 1 <= w <= W:
        raise ShapeError(f"width {w} outside 1..{W}")
    active = d_feats[..., :w, :]
    u = np.tanh(active @ tac.u_weight.T + tac.u_bias)          # (..., w, hid)
    q = np.tanh(u.mean(axis=-2) @ tac.q_weight.T + tac.q_bias)  # (..., hid)
    qb = np.broadcast_to(q[..., None, :], u.shape)
    scores = np.concatenate([u, qb], axis=-1) @ tac.b_weight.T + tac.b_bias
    scores = scores[..., 0]                                     # (..., w)
    scores = scores - scores.max(axis=-1, keepdims=True)
    expo = np.exp(scores)
    return expo / expo.sum(axis=-1, keepdims=True)


def _elastic_output(p: ElasticLayerParams, ys: np.ndarray, w: int) -> np.ndarray:
    """Head + TAC + weighted slot sum for RNN outputs ys (..., M) -> (..., N)."""
    N, W = p.embed_dim, p.width
    out = ys @ p.head_weight.T + p.head_bias
    slots = out.reshape(out.shape[:-1] + (W, out.shape[-1] // W))
    pvals = slots[..., :N]                                      # (..., W, N)
    dfeat = slots[..., N:]                                      # (..., W, V)
    weights = tac_weights(dfeat, p.tac, w)                      # (..., w)
    return np.sum(pvals[..., :w, :] * weights[..., None], axis=-2)


def _elastic_time(p: ElasticLayerParams, x: np.ndarray, w: int,
                  h: np.ndarray, c: np.ndarray):
    """Causal elastic time scan of x (N, K, T); K is the batch axis."""
    xs = rmvn(x.transpose(2, 1, 0), p.rmvn.alpha, p.rmvn.beta, p.rmvn.eps)
    ys, h, c = lstm_scan(p.cell, xs, h, c)
    out = _elastic_output(p, ys, w)                             # (T, K, N)
    return x + out.transpose(2, 1, 0), h, c


def _elastic_band(p: ElasticLayerParams, x: np.ndarray, w: int) -> np.ndarray:
    """Causal low-to-high elastic band scan of x (N, K, T); T is the batch axis."""
    xs = rmvn(x.transpose(1, 2, 0), p.rmvn.alpha, p.rmvn.beta, p.rmvn.eps)
    ys, _, _ = lstm_scan(p.cell, xs)
    out = _elastic_output(p, ys, w)                             # (K, T, N)
    return x + out.transpose(2, 0, 1)


def elastic_layer_forward(x: np.ndarray, p: ElasticLayerParams, w: int,
                          h: np.ndarray | None = None,
                          c: np.ndarray | None = None) -> np.ndarray:
    """Single elastic time-direction layer over x (N, K, T) from zero state."""
    if h is None:
        k = x.shape[1]
        h = np.zeros((k, p.cell.hidden_size))
        c = np.zeros((k, p.cell.hidden_size))
    y, _, _ = _elastic_time(p, x, w, h, c)
    return y


def decoder_forward(R: np.ndarray, params: list[ElasticBlockParams], w: int, d: int,
                    state: DecoderState | None = None) -> np.ndarray:
    """Decode embeddings R (N, K_bar, T) with width w and depth d.

    Runs exactly the first d blocks; with ``state`` given, continues a stream.
    """
    if R.ndim != 3:
        raise ShapeError("decoder input must be (N, K_bar, T)")
    if not 1 <= d <= len(params):
        raise ShapeError(f"depth {d} outside 1..{len(params)}")
    if not 1 <= w <= params[0].time.width:
        raise ShapeError(f"width {w} outside 1..{params[0].time.width}")
    _, k_bar, _ = R.shape
    if state is None:
        state = DecoderState.zeros(len(params), k_bar, params[0].time.cell.hidden_size)
    x = R
    for i in range(d):
        block = params[i]
        x, state.hidden[i], state.cell[i] = _elastic_time(
            block.time, x, w, state.hidden[i], state.cell[i])
        x = _elastic_band(block.band, x, w)
    return x


def decoder_step(R_t: np.ndarray, params: list[ElasticBlockParams], w: int, d: int,
                 state: DecoderState) -> np.ndarray:
    """Streaming single-frame decode: R_t (N, K_bar) -> (N, K_bar)."""
    return decoder_forward(R_t[:, :, None], params, w, d, state)[:, :, 0]


def reconstruct(decoded: np.ndarray, heads: ReconHeadParams, layout: BandLayout,
                num_bands: int | None = None) -> np.ndarray:
    """Map decoded embeddings (N, K_bar, T) to a complex (F, T) spectrogram.

    Band k's head produces 2*(2*G_k) values; the GLU gates the first half with
    the sigmoid of the second, yielding G_k real and G_k imaginary rows. Bands
    above K_bar are zero-filled so the result always spans the full layout.
    """
    K = num_bands if num_bands is not None else layout.num_bands
    if K != layout.num_bands:
        raise ShapeError("num_bands must match the layout")
    _, k_bar, T = decoded.shape
    if k_bar > K:
        raise ShapeError(f"decoded bands {k_bar} exceed layout bands {K}")
    bands = []
    for k in range(K):
        G = layout.bin_counts[k]
        if k >= k_bar:
            bands.append(np.zeros((G, T), dtype=np.complex128))
            continue
        x = decoded[:, k, :].T                                  # (T, N)
        out = x @ heads.weights[k].T + heads.biases[k]          # (T, 4G)
        half = out.shape[1] // 2
        gated = out[:, :half] * _sigmoid(out[:, half:])         # (T, 2G)
        bands.append((gated[:, :G] + 1j * gated[:, G:]).T)      # (G, T)
    return merge_bands(SubbandSpectrogram(bands), layout)
