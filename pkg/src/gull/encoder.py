"""Stacked causal band-split RNN encoder blocks.

Each block runs two residual recurrent sub-layers: one scanning frames in time
order (per subband, streaming state) and one scanning subbands low-to-high
within each frame (state reset every frame). A sub-layer computes
x + proj(LSTM(rmvn(x))). Band causality is what lets the same model serve
inputs of different sample rates: lower bands never see higher ones, so the
embeddings of the first K' bands do not depend on whether bands above K'
are present.

The final block output is L2-normalized along the embedding axis, which is
the precondition for spherical quantization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .frontend import RmvnParams, rmvn

NORMALIZE_EPS = 1e-12


@dataclass
class LstmParams:
    """Single-layer LSTM cell, torch gate order (input, forget, cell, output)."""
    weight_ih: np.ndarray  # (4M, N_in)
    weight_hh: np.ndarray  # (4M, M)
    bias_ih: np.ndarray    # (4M,)
    bias_hh: np.ndarray    # (4M,)

    @property
    def hidden_size(self) -> int:
        return self.weight_hh.shape[1]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def lstm_step(p: LstmParams, x: np.ndarray, h: np.ndarray, c: np.ndarray):
    """One cell step over a batch: x (B, N_in), h/c (B, M) -> (h', c')."""
    gates = x @ p.weight_ih.T + p.bias_ih + h @ p.weight_hh.T + p.bias_hh
    m = p.hidden_size
    i = _sigmoid(gates[:, :m])
    f = _sigmoid(gates[:, m:2 * m])
    g = np.tanh(gates[:, 2 * m:3 * m])
    o = _sigmoid(gates[:, 3 * m:])
    c_new = f * c + i * g
    return o * np.tanh(c_new), c_new


def lstm_scan(p: LstmParams, xs: np.ndarray, h: np.ndarray | None = None,
              c: np.ndarray | None = None):
    """Scan the cell over axis 0: xs (L, B, N_in) -> (ys (L, B, M), h, c)."""
    L, B, _ = xs.shape
    m = p.hidden_size
    if h is None:
        h = np.zeros((B, m))
        c = np.zeros((B, m))
    ys = np.empty((L, B, m))
    for t in range(L):
        h, c = lstm_step(p, xs[t], h, c)
        ys[t] = h
    return ys, h, c


@dataclass
class ResidualRnnParams:
    rmvn: RmvnParams
    cell: LstmParams
    proj_weight: np.ndarray  # (N, M)
    proj_bias: np.ndarray    # (N,)


@dataclass
class BsrnnBlockParams:
    time: ResidualRnnParams
    band: ResidualRnnParams


@dataclass
class EncoderState:
    """Per-block streaming state of the time-direction cells, shape (K_hat, M)."""
    hidden: list[np.ndarray] = field(default_factory=list)
    cell: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def zeros(cls, num_blocks: int, k_hat: int, hidden_size: int) -> "EncoderState":
        return cls([np.zeros((k_hat, hidden_size)) for _ in range(num_blocks)],
                   [np.zeros((k_hat, hidden_size)) for _ in range(num_blocks)])


def _residual_time(p: ResidualRnnParams, x: np.ndarray, h: np.ndarray, c: np.ndarray):
    """Causal time scan of x (N, K, T); K is the batch axis. Returns (y, h, c)."""
    xs = rmvn(x.transpose(2, 1, 0), p.rmvn.alpha, p.rmvn.beta, p.rmvn.eps)  # (T, K, N)
    ys, h, c = lstm_scan(p.cell, xs, h, c)
    out = ys @ p.proj_weight.T + p.proj_bias
    return x + out.transpose(2, 1, 0), h, c


def _residual_band(p: ResidualRnnParams, x: np.ndarray):
    """Causal low-to-high band scan of x (N, K, T); T is the batch axis."""
    xs = rmvn(x.transpose(1, 2, 0), p.rmvn.alpha, p.rmvn.beta, p.rmvn.eps)  # (K, T, N)
    ys, _, _ = lstm_scan(p.cell, xs)
    out = ys @ p.proj_weight.T + p.proj_bias
    return x + out.transpose(2, 0, 1)


def unit_normalize(x: np.ndarray, axis: int = 0) -> np.ndarray:
    return x / np.maximum(np.linalg.norm(x, axis=axis, keepdims=True), NORMALIZE_EPS)


def encoder_forward(E: np.ndarray, params: list[BsrnnBlockParams],
                    state: EncoderState | None = None) -> np.ndarray:
    """Encode embeddings E (N, K_hat, T) to unit-norm C (N, K_hat, T).

    When ``state`` is given it is advanced in place, so consecutive calls
    continue one logical stream.
    """
    if E.ndim != 3:
        raise ShapeError("encoder input must be (N, K_hat, T)")
    _, k_hat, _ = E.shape
    if state is None:
        state = EncoderState.zeros(len(params), k_hat, params[0].time.cell.hidden_size)
    if len(state.hidden) != len(params) or state.hidden[0].shape[0] != k_hat:
        raise ShapeError("encoder state does not match params/config")
    x = E
    for i, block in enumerate(params):
        x, state.hidden[i], state.cell[i] = _residual_time(
            block.time, x, state.hidden[i], state.cell[i])
        x = _residual_band(block.band, x)
    return unit_normalize(x, axis=0)


def encoder_step(E_t: np.ndarray, params: list[BsrnnBlockParams],
                 state: EncoderState) -> np.ndarray:
    """Streaming single-frame encode: E_t (N, K_hat) -> C_t (N, K_hat)."""
    return encoder_forward(E_t[:, :, None], params, state)[:, :, 0]
