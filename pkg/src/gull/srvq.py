"""Spherical residual vector quantization.

Hierarchy 1 snaps a unit-norm embedding to the nearest row of a unit-norm
codebook. Every later hierarchy refines the running estimate by choosing one
of 2^6 Householder reflections (I - 2*o o^T for a unit vector o); row 0 of
each rotation bank is pinned to the zero vector, which encodes the identity
map, so the quantization error can never increase with depth. Reflections are
orthogonal, so every estimate stays on the unit sphere.

Codebooks learn by exponential-moving-average updates of assignment counts
and sums; codes unused for 100 consecutive iterations are replaced by random
vectors from the current batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError

ROTATION_EPS = 1e-8       # rotation rows below this norm act as identity
DEFAULT_EMA_DECAY = 0.99
DEFAULT_LAPLACE_EPS = 1e-5
DEAD_CODE_AGE = 100


@dataclass
class Codebook:
    """First-hierarchy codes plus EMA statistics for one subband."""
    codes: np.ndarray       # (J, N), unit-norm rows
    ema_size: np.ndarray    # (J,)
    ema_sum: np.ndarray     # (J, N)
    age: np.ndarray         # (J,), iterations since last use

    @classmethod
    def from_codes(cls, codes: np.ndarray) -> "Codebook":
        codes = np.asarray(codes, dtype=np.float64)
        J = codes.shape[0]
        return cls(codes.copy(), np.ones(J), codes.copy(), np.zeros(J, dtype=np.int64))

    @property
    def num_codes(self) -> int:
        return self.codes.shape[0]


@dataclass
class RotationBank:
    """Householder rotation vectors for hierarchies 2..H of one subband.

    vectors[h-2] has shape (J_h, N); row 0 is pinned to zero (identity).
    Rows are stored unconstrained and normalized on use.
    """
    vectors: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.vectors = [np.asarray(v, dtype=np.float64).copy() for v in self.vectors]
        for v in self.vectors:
            v[0] = 0.0

    @property
    def num_hierarchies(self) -> int:
        return len(self.vectors) + 1


def apply_rotation(e: np.ndarray, o: np.ndarray) -> np.ndarray:
    """Reflect e across the hyperplane orthogonal to o; zero o is identity."""
    e = np.asarray(e, dtype=np.float64)
    o = np.asarray(o, dtype=np.float64)
    n = np.linalg.norm(o)
    if n < ROTATION_EPS:
        return e.copy()
    o_hat = o / n
    return e - 2.0 * (e @ o_hat) * o_hat


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    """Normalize rotation rows; rows under the epsilon stay zero (identity)."""
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return np.where(norms < ROTATION_EPS, 0.0, vectors / np.maximum(norms, ROTATION_EPS))


def quantize_unit_vector(c: np.ndarray, book: Codebook, rots: RotationBank,
                         h: int) -> tuple[np.ndarray, np.ndarray]:
    """Quantize one unit vector through h hierarchies.

    Returns (indices (h,), estimates (h, N)): estimates[j] is the running
    quantized embedding after hierarchy j+1.
    """
    idx, est = quantize_batch(c[None, :], book, rots, h)
    return idx[0], est[:, 0, :]


def quantize_batch(C: np.ndarray, book: Codebook, rots: RotationBank,
                   h: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized quantization of C (n, N) unit vectors through h hierarchies.

    Returns indices (n, h) and per-hierarchy estimates (h, n, N). Ties pick
    the lowest index (np.argmin convention), keeping streams reproducible.
    """
    if not 1 <= h <= rots.num_hierarchies:
        raise ShapeError(f"hierarchy count {h} outside 1..{rots.num_hierarchies}")
    C = np.asarray(C, dtype=np.float64)
    n, N = C.shape
    # ||q - c||^2 = ||q||^2 - 2 q.c + ||c||^2; the c term is constant per row
    q = book.codes
    d2 = np.sum(q * q, axis=1)[None, :] - 2.0 * C @ q.T
    indices = np.empty((n, h), dtype=np.int64)
    estimates = np.empty((h, n, N))
    indices[:, 0] = np.argmin(d2, axis=1)
    e = q[indices[:, 0]]
    estimates[0] = e
    for level in range(2, h + 1):
        o_hat = _unit_rows(rots.vectors[level - 2])          # (J, N)
        dots = e @ o_hat.T                                   # (n, J)
        cand = e[:, None, :] - 2.0 * dots[:, :, None] * o_hat[None, :, :]
        dist = np.linalg.norm(cand - C[:, None, :], axis=2)  # (n, J)
        j = np.argmin(dist, axis=1)
        indices[:, level - 1] = j
        # recompute the winner with the exact arithmetic dequantize uses, so
        # encoder- and decoder-side estimates agree bit-for-bit
        e = _reflect_rows(e, o_hat[j])
        estimates[level - 1] = e
    return indices, estimates


def _reflect_rows(e: np.ndarray, o_hat: np.ndarray) -> np.ndarray:
    """Householder reflection of each row of e by the matching row of o_hat."""
    return e - 2.0 * np.sum(e * o_hat, axis=1, keepdims=True) * o_hat


def dequantize(indices: np.ndarray, book: Codebook, rots: RotationBank) -> np.ndarray:
    """Reconstruct embeddings from indices (n, h) or (h,); bit-exact replay."""
    idx = np.asarray(indices, dtype=np.int64)
    squeeze = idx.ndim == 1
    if squeeze:
        idx = idx[None, :]
    h = idx.shape[1]
    if not 1 <= h <= rots.num_hierarchies:
        raise ShapeError(f"hierarchy count {h} outside 1..{rots.num_hierarchies}")
    if np.any(idx[:, 0] < 0) or np.any(idx[:, 0] >= book.num_codes):
        raise ShapeError("first-hierarchy index out of range")
    e = book.codes[idx[:, 0]]
    for level in range(2, h + 1):
        vectors = rots.vectors[level - 2]
        j = idx[:, level - 1]
        if np.any(j < 0) or np.any(j >= vectors.shape[0]):
            raise ShapeError(f"hierarchy {level} index out of range")
        e = _reflect_rows(e, _unit_rows(vectors)[j])
    return e[0] if squeeze else e


def ema_update(book: Codebook, assignments: list[tuple[int, np.ndarray]],
               decay: float = DEFAULT_EMA_DECAY,
               laplace_eps: float = DEFAULT_LAPLACE_EPS) -> None:
    """EMA codebook update from a batch of (code index, encoder vector) pairs.

    Codes assigned this batch reset their age; all others age by one. An empty
    batch only ages the codes. Rows are re-normalized to the unit sphere after
    the statistics move.
    """
    if not 0.0 < decay < 1.0:
        raise ShapeError("decay must lie in (0, 1)")
    J, N = book.codes.shape
    if not assignments:
        book.age += 1
        return
    counts = np.zeros(J)
    sums = np.zeros((J, N))
    for j, vec in assignments:
        counts[j] += 1.0
        sums[j] += np.asarray(vec, dtype=np.float64)
    book.ema_size = decay * book.ema_size + (1.0 - decay) * counts
    book.ema_sum = decay * book.ema_sum + (1.0 - decay) * sums
    total = book.ema_size.sum()
    smoothed = (book.ema_size + laplace_eps) / (total + J * laplace_eps) * total
    rows = book.ema_sum / np.maximum(smoothed, 1e-30)[:, None]
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    book.codes = np.where(norms > 1e-30, rows / np.maximum(norms, 1e-30), book.codes)
    used = counts > 0
    book.age[used] = 0
    book.age[~used] += 1


def replace_dead_codes(book: Codebook, batch: np.ndarray, seed: int) -> np.ndarray:
    """Overwrite codes unused for DEAD_CODE_AGE iterations with batch samples.

    Returns the indices of replaced codes. Replacement vectors are drawn
    uniformly from ``batch`` (n, N) with a seeded RNG and re-normalized.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise ShapeError("replacement batch must be a non-empty (n, N) array")
    dead = np.flatnonzero(book.age >= DEAD_CODE_AGE)
    if dead.size == 0:
        return dead
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, batch.shape[0], size=dead.size)
    rows = batch[picks]
    rows = rows / np.maximum(np.linalg.norm(rows, axis=1, keepdims=True), 1e-30)
    book.codes[dead] = rows
    book.ema_sum[dead] = rows
    book.ema_size[dead] = 1.0
    book.age[dead] = 0
    return dead


def commitment_loss(C: np.ndarray, estimates: np.ndarray) -> float:
    """Scalar commitment value over C (N, K_hat, T) and estimates (H, N, K_hat, T).

    Equals mean ||c - e^1|| plus twice the mean over hierarchies >= 2 of
    ||c - e^h|| (the two stop-gradient placements coincide in value; the
    gradient-flow distinction only matters to a trainer).
    """
    C = np.asarray(C, dtype=np.float64)
    estimates = np.asarray(estimates, dtype=np.float64)
    if estimates.shape[1:] != C.shape:
        raise ShapeError("estimates must be (H,) + C.shape")
    H = estimates.shape[0]
    norms = np.linalg.norm(estimates - C[None], axis=1)  # (H, K_hat, T)
    loss = norms[0].mean()
    if H > 1:
        loss += 2.0 * norms[1:].mean()
    return float(loss)


def pad_superres(R: np.ndarray, k_bar: int) -> np.ndarray:
    """Zero-pad quantized embeddings (N, K_hat, T) up to (N, k_bar, T)."""
    N, k_hat, T = R.shape
    if k_bar < k_hat:
        raise ShapeError(f"target band count {k_bar} below valid band count {k_hat}")
    if k_bar == k_hat:
        return R.copy()
    out = np.zeros((N, k_bar, T))
    out[:, :k_hat, :] = R
    return out
