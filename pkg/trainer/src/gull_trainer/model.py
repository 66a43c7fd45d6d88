"""Differentiable Gull model in torch.

The forward math mirrors the codec's numpy implementation operation for
operation (same norm floors, same normalization epsilons, same slot layout),
because exported weights and emitted fixtures must replay on the other side
within 1e-5. Tensors flow as (B, N, K, T); the codec's single-stream arrays
correspond to B=1.
"""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .configs import ToyModelSpec, ToyTrainConfig, config_hash, config_text

NORM_FLOOR = 1e-8       # gain-shape norm clamp
ROTATION_EPS = 1e-8     # rotation rows below this norm act as identity
UNIT_EPS = 1e-12

DISC_WINDOWS = (256, 512, 1024, 2048, 4096)
DISC_CHANNELS = (32, 32, 64, 64, 128, 128)


# ---------------------------------------------------------------------------
# signal helpers

def sqrt_hann(window: int, dtype=torch.float64) -> torch.Tensor:
    n = torch.arange(window, dtype=dtype)
    return torch.sqrt(0.5 - 0.5 * torch.cos(2 * math.pi * n / window))


def stft(x: torch.Tensor, window: int, hop: int) -> torch.Tensor:
    """Causal STFT of (B, L) -> complex (B, F, T), T = ceil(L/hop)."""
    B, L = x.shape
    T = max(int(math.ceil(L / hop)), 1)
    pad = (T - 1) * hop + window - L
    frames = F.pad(x, (0, pad)).unfold(1, window, hop)      # (B, T, window)
    frames = frames * sqrt_hann(window, x.dtype).to(x.device)
    return torch.fft.rfft(frames, dim=2).transpose(1, 2)    # (B, F, T)


def istft(spec: torch.Tensor, window: int, hop: int) -> torch.Tensor:
    """Overlap-add inverse of stft; output (B, T*hop)."""
    B, _, T = spec.shape
    real_dtype = torch.float32 if spec.dtype == torch.complex64 else torch.float64
    w = sqrt_hann(window, real_dtype).to(spec.device)
    frames = torch.fft.irfft(spec.transpose(1, 2), n=window, dim=2) * w
    out_len = (T - 1) * hop + window
    blocks = frames.permute(0, 2, 1)                        # (B, window, T)
    out = F.fold(blocks, output_size=(1, out_len), kernel_size=(1, window),
                 stride=(1, hop)).squeeze(1).squeeze(1)
    wsq = (w * w).expand(B, T, window).permute(0, 2, 1)
    den = F.fold(wsq, output_size=(1, out_len), kernel_size=(1, window),
                 stride=(1, hop)).squeeze(1).squeeze(1)
    return (out / den.clamp_min(1e-8))[:, :T * hop]


def gain_shape(frames: torch.Tensor) -> torch.Tensor:
    """Complex (..., G) -> real (..., 2G+1) gain-shape vectors."""
    norm = torch.linalg.vector_norm(frames, dim=-1, keepdim=True).clamp_min(NORM_FLOOR)
    return torch.cat([frames.real / norm, frames.imag / norm, torch.log(norm)], dim=-1)


def unit_normalize(x: torch.Tensor, dim: int) -> torch.Tensor:
    return x / torch.linalg.vector_norm(x, dim=dim, keepdim=True).clamp_min(UNIT_EPS)


class Rmvn(nn.Module):
    """Per-vector standardization with learned affine rescaling (last dim)."""

    def __init__(self, dim: int, eps: float = 1e-5):
        super().__init__()
        self.alpha = nn.Parameter(torch.ones(dim, dtype=torch.float64))
        self.beta = nn.Parameter(torch.zeros(dim, dtype=torch.float64))
        self.eps = eps

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        mean = x.mean(dim=-1, keepdim=True)
        var = x.var(dim=-1, keepdim=True, unbiased=False)
        return (x - mean) / torch.sqrt(var + self.eps) * self.alpha + self.beta


def _linear(in_dim: int, out_dim: int) -> nn.Linear:
    layer = nn.Linear(in_dim, out_dim, dtype=torch.float64)
    return layer


# ---------------------------------------------------------------------------
# frontend

class BandFrontend(nn.Module):
    def __init__(self, bins: int, embed_dim: int, eps: float):
        super().__init__()
        self.rmvn = Rmvn(2 * bins + 1, eps)
        self.embed = _linear(2 * bins + 1, embed_dim)

    def forward(self, band: torch.Tensor) -> torch.Tensor:
        """Complex (B, G, T) -> (B, N, T)."""
        g = gain_shape(band.permute(0, 2, 1))               # (B, T, 2G+1)
        return self.embed(self.rmvn(g)).permute(0, 2, 1)


class Frontend(nn.Module):
    def __init__(self, spec: ToyModelSpec, eps: float):
        super().__init__()
        self.bands = nn.ModuleList(
            [BandFrontend(g, spec.embed_dim, eps) for g in spec.bands.bin_counts])
        self.offsets = []
        acc = 0
        for g in spec.bands.bin_counts:
            self.offsets.append(acc)
            acc += g
        self.bin_counts = spec.bands.bin_counts

    def forward(self, spec_bins: torch.Tensor, k_hat: int) -> torch.Tensor:
        """Complex (B, F, T) -> embeddings (B, N, K_hat, T)."""
        cols = []
        for k in range(k_hat):
            lo = self.offsets[k]
            cols.append(self.bands[k](spec_bins[:, lo:lo + self.bin_counts[k]]))
        return torch.stack(cols, dim=2)


# ---------------------------------------------------------------------------
# encoder

def _scan_time(lstm: nn.LSTM, x: torch.Tensor) -> torch.Tensor:
    """(B, N, K, T) -> (T, B*K, N) LSTM scan -> (B, M, K, T)."""
    B, N, K, T = x.shape
    seq = x.permute(3, 0, 2, 1).reshape(T, B * K, N)
    out, _ = lstm(seq)
    return out.reshape(T, B, K, -1).permute(1, 3, 2, 0)


def _scan_band(lstm: nn.LSTM, x: torch.Tensor) -> torch.Tensor:
    """(B, N, K, T) -> (K, B*T, N) LSTM scan -> (B, M, K, T)."""
    B, N, K, T = x.shape
    seq = x.permute(2, 0, 3, 1).reshape(K, B * T, N)
    out, _ = lstm(seq)
    return out.reshape(K, B, T, -1).permute(1, 3, 0, 2)


class ResidualRnn(nn.Module):
    def __init__(self, embed_dim: int, hidden: int, eps: float, direction: str):
        super().__init__()
        self.rmvn = Rmvn(embed_dim, eps)
        self.cell = nn.LSTM(embed_dim, hidden, dtype=torch.float64)
        self.proj = _linear(hidden, embed_dim)
        self.direction = direction

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        normed = self.rmvn(x.permute(0, 2, 3, 1)).permute(0, 3, 1, 2)
        scan = _scan_time if self.direction == "time" else _scan_band
        ys = scan(self.cell, normed)
        out = self.proj(ys.permute(0, 2, 3, 1)).permute(0, 3, 1, 2)
        return x + out


class Encoder(nn.Module):
    def __init__(self, spec: ToyModelSpec, eps: float):
        super().__init__()
        self.blocks = nn.ModuleList()
        for _ in range(spec.num_encoder_layers):
            self.blocks.append(nn.ModuleDict({
                "time": ResidualRnn(spec.embed_dim, spec.rnn_hidden, eps, "time"),
                "band": ResidualRnn(spec.embed_dim, spec.rnn_hidden, eps, "band"),
            }))

    def forward(self, E: torch.Tensor) -> torch.Tensor:
        x = E
        for block in self.blocks:
            x = block["band"](block["time"](x))
        return unit_normalize(x, dim=1)


# ---------------------------------------------------------------------------
# quantizer

class BandSrvq(nn.Module):
    def __init__(self, embed_dim: int, bits: tuple[int, ...], seed: int):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        codes = torch.randn(2 ** bits[0], embed_dim, generator=gen, dtype=torch.float64)
        codes = unit_normalize(codes, dim=1)
        self.register_buffer("codebook", codes)
        self.register_buffer("ema_size", torch.ones(2 ** bits[0], dtype=torch.float64))
        self.register_buffer("ema_sum", codes.clone())
        self.register_buffer("age", torch.zeros(2 ** bits[0], dtype=torch.long))
        # hierarchy h >= 2 stores (J_h - 1, N); the zero identity row is
        # prepended at use so it can never drift from exact zero
        self.rotations = nn.ParameterList([
            nn.Parameter(0.5 * torch.randn(2 ** b - 1, embed_dim, generator=gen,
                                           dtype=torch.float64))
            for b in bits[1:]])

    def full_rotations(self, level: int) -> torch.Tensor:
        rows = self.rotations[level]
        zero = torch.zeros(1, rows.shape[1], dtype=rows.dtype, device=rows.device)
        return torch.cat([zero, rows], dim=0)

    @staticmethod
    def _unit_rows(rows: torch.Tensor) -> torch.Tensor:
        norms = torch.linalg.vector_norm(rows, dim=1, keepdim=True)
        unit = rows / norms.clamp_min(ROTATION_EPS)
        return torch.where(norms < ROTATION_EPS, torch.zeros_like(rows), unit)

    def quantize(self, c: torch.Tensor, h: int):
        """Unit vectors (n, N) -> (indices (n, h), estimates list of (n, N)).

        Index search runs without gradients; the returned estimates replay the
        selected codes/rotations differentiably (codebook rows are buffers, so
        gradient reaches only the rotation vectors).
        """
        with torch.no_grad():
            q = self.codebook
            d2 = (q * q).sum(dim=1)[None, :] - 2.0 * c @ q.T
            j = torch.argmin(d2, dim=1)
        indices = [j]
        e = self.codebook[j]
        estimates = [e]
        for level in range(h - 1):
            o_hat = self._unit_rows(self.full_rotations(level))
            with torch.no_grad():
                dots = e @ o_hat.T
                cand = e[:, None, :] - 2.0 * dots[:, :, None] * o_hat[None, :, :]
                dist = torch.linalg.vector_norm(cand - c[:, None, :], dim=2)
                jr = torch.argmin(dist, dim=1)
            indices.append(jr)
            o_sel = o_hat[jr]
            e = e - 2.0 * (e * o_sel).sum(dim=1, keepdim=True) * o_sel
            estimates.append(e)
        return torch.stack(indices, dim=1), estimates

    def dequantize(self, indices: torch.Tensor) -> torch.Tensor:
        e = self.codebook[indices[:, 0]]
        for level in range(indices.shape[1] - 1):
            o_hat = self._unit_rows(self.full_rotations(level))[indices[:, level + 1]]
            e = e - 2.0 * (e * o_hat).sum(dim=1, keepdim=True) * o_hat
        return e

    @torch.no_grad()
    def ema_update(self, indices: torch.Tensor, vectors: torch.Tensor,
                   decay: float, laplace_eps: float) -> None:
        J, N = self.codebook.shape
        dt = self.codebook.dtype
        counts = torch.zeros(J, dtype=dt).index_add_(
            0, indices, torch.ones_like(indices, dtype=dt))
        sums = torch.zeros(J, N, dtype=dt).index_add_(0, indices, vectors.to(dt))
        self.ema_size.mul_(decay).add_(counts, alpha=1 - decay)
        self.ema_sum.mul_(decay).add_(sums, alpha=1 - decay)
        total = self.ema_size.sum()
        smoothed = (self.ema_size + laplace_eps) / (total + J * laplace_eps) * total
        rows = self.ema_sum / smoothed.clamp_min(1e-30)[:, None]
        norms = torch.linalg.vector_norm(rows, dim=1, keepdim=True)
        good = norms[:, 0] > 1e-30
        self.codebook[good] = rows[good] / norms[good]
        used = counts > 0
        self.age[used] = 0
        self.age[~used] += 1

    @torch.no_grad()
    def replace_dead(self, batch: torch.Tensor, gen: torch.Generator,
                     max_age: int = 100) -> int:
        dead = torch.nonzero(self.age >= max_age).flatten()
        if dead.numel() == 0:
            return 0
        picks = torch.randint(0, batch.shape[0], (dead.numel(),), generator=gen)
        rows = unit_normalize(batch[picks], dim=1)
        self.codebook[dead] = rows
        self.ema_sum[dead] = rows
        self.ema_size[dead] = 1.0
        self.age[dead] = 0
        return int(dead.numel())


class Srvq(nn.Module):
    def __init__(self, spec: ToyModelSpec, seed: int):
        super().__init__()
        self.bands = nn.ModuleList([
            BandSrvq(spec.embed_dim, spec.bits_per_hierarchy, seed + 71 * k)
            for k in range(spec.num_bands)])

    def forward(self, C: torch.Tensor, h: int):
        """C (B, N, K_hat, T) -> (R (B, N, K_hat, T), indices, estimates).

        estimates is a list over hierarchies of tensors like C, for the
        commitment loss; R is the final estimate.
        """
        B, N, k_hat, T = C.shape
        per_band_e, per_band_idx = [], []
        for k in range(k_hat):
            flat = C[:, :, k, :].permute(0, 2, 1).reshape(B * T, N)
            idx, est = self.bands[k].quantize(flat, h)
            per_band_idx.append(idx.reshape(B, T, -1))
            per_band_e.append([e.reshape(B, T, N).permute(0, 2, 1) for e in est])
        estimates = [torch.stack([pb[level] for pb in per_band_e], dim=2)
                     for level in range(h)]           # each (B, N, K_hat, T)
        indices = torch.stack(per_band_idx, dim=2)    # (B, T, K_hat, h)
        return estimates[-1], indices, estimates


# ---------------------------------------------------------------------------
# decoder

class Tac(nn.Module):
    def __init__(self, aux_dim: int, hidden: int):
        super().__init__()
        self.u = _linear(aux_dim, hidden)
        self.q = _linear(hidden, hidden)
        self.b = _linear(2 * hidden, 1)

    def forward(self, d_feats: torch.Tensor, w: int) -> torch.Tensor:
        """(..., W, V) -> softmax weights (..., w) over the first w slots."""
        active = d_feats[..., :w, :]
        u = torch.tanh(self.u(active))
        q = torch.tanh(self.q(u.mean(dim=-2)))
        qb = q.unsqueeze(-2).expand_as(u)
        scores = self.b(torch.cat([u, qb], dim=-1)).squeeze(-1)
        return torch.softmax(scores, dim=-1)


class ElasticLayer(nn.Module):
    def __init__(self, spec: ToyModelSpec, eps: float, direction: str):
        super().__init__()
        N, V, W = spec.embed_dim, spec.elastic_aux_dim, spec.elastic_width
        self.rmvn = Rmvn(N, eps)
        self.cell = nn.LSTM(N, spec.rnn_hidden, dtype=torch.float64)
        self.head = _linear(spec.rnn_hidden, (N + V) * W)
        self.tac = Tac(V, spec.tac_hidden)
        self.embed_dim, self.aux_dim, self.width = N, V, W
        self.direction = direction

    def forward(self, x: torch.Tensor, w: int) -> torch.Tensor:
        normed = self.rmvn(x.permute(0, 2, 3, 1)).permute(0, 3, 1, 2)
        scan = _scan_time if self.direction == "time" else _scan_band
        ys = scan(self.cell, normed).permute(0, 2, 3, 1)    # (B, K, T, M)
        out = self.head(ys)
        slots = out.reshape(out.shape[:-1] + (self.width, self.embed_dim + self.aux_dim))
        pvals = slots[..., :self.embed_dim]                 # (B, K, T, W, N)
        dfeat = slots[..., self.embed_dim:]                 # (B, K, T, W, V)
        weights = self.tac(dfeat, w)                        # (B, K, T, w)
        mix = (pvals[..., :w, :] * weights.unsqueeze(-1)).sum(dim=-2)
        return x + mix.permute(0, 3, 1, 2)


class Decoder(nn.Module):
    def __init__(self, spec: ToyModelSpec, eps: float):
        super().__init__()
        self.blocks = nn.ModuleList()
        for _ in range(spec.num_decoder_layers):
            self.blocks.append(nn.ModuleDict({
                "time": ElasticLayer(spec, eps, "time"),
                "band": ElasticLayer(spec, eps, "band"),
            }))

    def forward(self, R: torch.Tensor, w: int, d: int) -> torch.Tensor:
        x = R
        for block in self.blocks[:d]:
            x = block["band"](block["time"](x, w), w)
        return x


class ReconHeads(nn.Module):
    def __init__(self, spec: ToyModelSpec):
        super().__init__()
        self.glu = nn.ModuleList(
            [_linear(spec.embed_dim, 4 * g) for g in spec.bands.bin_counts])
        # spectrogram targets sit well above a unit-scale linear layer's
        # output range; a wider init removes most of the dead time spent
        # growing the output scale
        with torch.no_grad():
            for head in self.glu:
                head.weight[:head.weight.shape[0] // 2] *= 4.0
        self.bin_counts = spec.bands.bin_counts
        self.num_bins = spec.num_bins

    def forward(self, decoded: torch.Tensor) -> torch.Tensor:
        """(B, N, K_bar, T) -> complex (B, F, T), bands above K_bar zero."""
        B, _, k_bar, T = decoded.shape
        cdtype = torch.complex64 if decoded.dtype == torch.float32 else torch.complex128
        bands = []
        for k, G in enumerate(self.bin_counts):
            if k >= k_bar:
                bands.append(torch.zeros(B, G, T, dtype=cdtype,
                                         device=decoded.device))
                continue
            x = decoded[:, :, k, :].permute(0, 2, 1)        # (B, T, N)
            out = self.glu[k](x)
            half = out.shape[-1] // 2
            gated = out[..., :half] * torch.sigmoid(out[..., half:])
            spec = torch.complex(gated[..., :G], gated[..., G:])
            bands.append(spec.permute(0, 2, 1))
        return torch.cat(bands, dim=1)


# ---------------------------------------------------------------------------
# discriminators

def spectral_normalize(weight: torch.Tensor, u: torch.Tensor,
                       update: bool = False) -> torch.Tensor:
    mat = weight.reshape(weight.shape[0], -1)
    with torch.no_grad():
        v = mat.T @ u
        v = v / torch.linalg.vector_norm(v).clamp_min(UNIT_EPS)
        u_new = mat @ v
        u_new = u_new / torch.linalg.vector_norm(u_new).clamp_min(UNIT_EPS)
        if update:
            u.copy_(u_new)
    sigma = (u_new * (mat @ v)).sum()
    return weight / sigma.clamp_min(UNIT_EPS)


class Discriminator(nn.Module):
    """Six bias-free 3x3 conv blocks with leaky ReLU and spectral norm."""

    def __init__(self, window: int, seed: int):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        self.window = window
        self.convs = nn.ParameterList()
        c_in = 2
        for i, c_out in enumerate(DISC_CHANNELS):
            w = torch.randn(c_out, c_in, 3, 3, generator=gen, dtype=torch.float64)
            w /= math.sqrt(c_in * 9)
            self.convs.append(nn.Parameter(w))
            self.register_buffer(f"u{i}", unit_normalize(
                torch.randn(c_out, generator=gen, dtype=torch.float64), 0))
            c_in = c_out
        self.score = nn.Parameter(
            torch.randn(1, c_in, 1, 1, generator=gen, dtype=torch.float64)
            / math.sqrt(c_in))
        self.register_buffer("score_u", torch.ones(1, dtype=torch.float64))

    def forward(self, spec: torch.Tensor, update_sn: bool = False):
        """Complex (B, F', T) -> (score map, list of 6 hidden features)."""
        x = torch.stack([spec.real, spec.imag], dim=1).to(self.convs[0].dtype)
        norms = torch.linalg.vector_norm(x.reshape(x.shape[0], -1), dim=1)
        x = x / norms.clamp_min(UNIT_EPS)[:, None, None, None]
        feats = []
        for i, weight in enumerate(self.convs):
            w = spectral_normalize(weight, getattr(self, f"u{i}"), update_sn)
            stride = 1 if i % 2 == 0 else 2
            x = F.leaky_relu(F.conv2d(x, w, stride=stride, padding=1), 0.2)
            feats.append(x)
        w = spectral_normalize(self.score, self.score_u, update_sn)
        return F.conv2d(x, w), feats


class DiscriminatorBank(nn.Module):
    def __init__(self, windows: tuple[int, ...], seed: int):
        super().__init__()
        self.windows = windows
        self.discs = nn.ModuleList(
            [Discriminator(win, seed + 13 * i) for i, win in enumerate(windows)])

    def forward(self, signal: torch.Tensor, valid_ratio: float = 1.0,
                update_sn: bool = False):
        scores, feats = [], []
        for win, disc in zip(self.windows, self.discs):
            spec = stft(signal, win, win // 2)
            keep = max(int(round(spec.shape[1] * valid_ratio)), 1)
            s, f = disc(spec[:, :keep], update_sn)
            scores.append(s)
            feats.append(f)
        return scores, feats


# ---------------------------------------------------------------------------
# whole model

class GullModel(nn.Module):
    def __init__(self, spec: ToyModelSpec, eps: float = 1e-5, seed: int = 0,
                 disc_windows: tuple[int, ...] = DISC_WINDOWS):
        super().__init__()
        torch.manual_seed(seed)
        self.spec = spec
        self.frontend = Frontend(spec, eps)
        self.encoder = Encoder(spec, eps)
        self.srvq = Srvq(spec, seed)
        self.decoder = Decoder(spec, eps)
        self.recon = ReconHeads(spec)
        self.discriminators = DiscriminatorBank(disc_windows, seed + 1000)
        self.rmvn_eps = eps

    def encode(self, signal: torch.Tensor, k_hat: int) -> torch.Tensor:
        spec_bins = stft(signal, self.spec.window_size, self.spec.hop_size)
        E = self.frontend(spec_bins, k_hat)
        return self.encoder(E)

    def decode(self, R: torch.Tensor, w: int, d: int, k_bar: int) -> torch.Tensor:
        B, N, k_hat, T = R.shape
        if k_bar > k_hat:
            pad = torch.zeros(B, N, k_bar - k_hat, T, dtype=R.dtype, device=R.device)
            R = torch.cat([R, pad], dim=2)
        decoded = self.decoder(R, w, d)
        spec_bins = self.recon(decoded)
        return istft(spec_bins, self.spec.window_size, self.spec.hop_size)

    # -- weight exchange ----------------------------------------------------

    def export_tensors(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}

        def put(name, tensor):
            out[name] = tensor.detach().cpu().numpy().astype(np.float32)

        for k, band in enumerate(self.frontend.bands):
            put(f"frontend.band{k}.rmvn.alpha", band.rmvn.alpha)
            put(f"frontend.band{k}.rmvn.beta", band.rmvn.beta)
            put(f"frontend.band{k}.embed.weight", band.embed.weight)
            put(f"frontend.band{k}.embed.bias", band.embed.bias)
        for i, block in enumerate(self.encoder.blocks):
            for direction in ("time", "band"):
                sub = block[direction]
                base = f"enc.block{i}.{direction}"
                put(f"{base}.rmvn.alpha", sub.rmvn.alpha)
                put(f"{base}.rmvn.beta", sub.rmvn.beta)
                put(f"{base}.cell.weight_ih", sub.cell.weight_ih_l0)
                put(f"{base}.cell.weight_hh", sub.cell.weight_hh_l0)
                put(f"{base}.cell.bias_ih", sub.cell.bias_ih_l0)
                put(f"{base}.cell.bias_hh", sub.cell.bias_hh_l0)
                put(f"{base}.proj.weight", sub.proj.weight)
                put(f"{base}.proj.bias", sub.proj.bias)
        for k, band in enumerate(self.srvq.bands):
            put(f"vq.band{k}.codebook", band.codebook)
            put(f"vq.band{k}.ema_size", band.ema_size)
            put(f"vq.band{k}.ema_sum", band.ema_sum)
            put(f"vq.band{k}.age", band.age.to(torch.float64))
            for level in range(len(band.rotations)):
                put(f"vq.band{k}.h{level + 2}.rotations", band.full_rotations(level))
        for i, block in enumerate(self.decoder.blocks):
            for direction in ("time", "band"):
                sub = block[direction]
                base = f"dec.block{i}.{direction}"
                put(f"{base}.rmvn.alpha", sub.rmvn.alpha)
                put(f"{base}.rmvn.beta", sub.rmvn.beta)
                put(f"{base}.cell.weight_ih", sub.cell.weight_ih_l0)
                put(f"{base}.cell.weight_hh", sub.cell.weight_hh_l0)
                put(f"{base}.cell.bias_ih", sub.cell.bias_ih_l0)
                put(f"{base}.cell.bias_hh", sub.cell.bias_hh_l0)
                put(f"{base}.head.weight", sub.head.weight)
                put(f"{base}.head.bias", sub.head.bias)
                put(f"{base}.tac.u.weight", sub.tac.u.weight)
                put(f"{base}.tac.u.bias", sub.tac.u.bias)
                put(f"{base}.tac.q.weight", sub.tac.q.weight)
                put(f"{base}.tac.q.bias", sub.tac.q.bias)
                put(f"{base}.tac.b.weight", sub.tac.b.weight)
                put(f"{base}.tac.b.bias", sub.tac.b.bias)
        for k, head in enumerate(self.recon.glu):
            put(f"recon.band{k}.glu.weight", head.weight)
            put(f"recon.band{k}.glu.bias", head.bias)
        for disc in self.discriminators.discs:
            base = f"disc.r{disc.window}"
            for i, weight in enumerate(disc.convs):
                put(f"{base}.block{i}.weight", weight)
                put(f"{base}.block{i}.sn_u", getattr(disc, f"u{i}"))
            put(f"{base}.score.weight", disc.score)
            put(f"{base}.score.sn_u", disc.score_u)
        return out

    def export_metadata(self, train_config: ToyTrainConfig | None = None) -> dict:
        decay = train_config.ema_decay if train_config else 0.99
        return {
            "model_type": self.spec.model_type,
            "config_hash": config_hash(self.spec),
            "config_text": config_text(self.spec),
            "rmvn_eps": self.rmvn_eps,
            "ema_decay": decay,
        }

    @torch.no_grad()
    def load_tensors(self, tensors: dict[str, np.ndarray]) -> None:
        """Inverse of export_tensors (used by round-trip tests)."""
        exported = self.export_tensors()
        lookup = dict(self._export_targets())
        for name in exported:
            if name not in tensors:
                raise KeyError(f"missing tensor {name}")
            value = torch.from_numpy(np.asarray(tensors[name], dtype=np.float64))
            target = lookup[name]
            if name.endswith(".rotations"):
                target.copy_(value[1:])
            elif name.endswith(".age"):
                target.copy_(value.to(torch.long))
            else:
                target.copy_(value)

    def _export_targets(self):
        for k, band in enumerate(self.frontend.bands):
            yield f"frontend.band{k}.rmvn.alpha", band.rmvn.alpha
            yield f"frontend.band{k}.rmvn.beta", band.rmvn.beta
            yield f"frontend.band{k}.embed.weight", band.embed.weight
            yield f"frontend.band{k}.embed.bias", band.embed.bias
        for i, block in enumerate(self.encoder.blocks):
            for direction in ("time", "band"):
                sub, base = block[direction], f"enc.block{i}.{direction}"
                yield f"{base}.rmvn.alpha", sub.rmvn.alpha
                yield f"{base}.rmvn.beta", sub.rmvn.beta
                yield f"{base}.cell.weight_ih", sub.cell.weight_ih_l0
                yield f"{base}.cell.weight_hh", sub.cell.weight_hh_l0
                yield f"{base}.cell.bias_ih", sub.cell.bias_ih_l0
                yield f"{base}.cell.bias_hh", sub.cell.bias_hh_l0
                yield f"{base}.proj.weight", sub.proj.weight
                yield f"{base}.proj.bias", sub.proj.bias
        for k, band in enumerate(self.srvq.bands):
            yield f"vq.band{k}.codebook", band.codebook
            yield f"vq.band{k}.ema_size", band.ema_size
            yield f"vq.band{k}.ema_sum", band.ema_sum
            yield f"vq.band{k}.age", band.age
            for level in range(len(band.rotations)):
                yield f"vq.band{k}.h{level + 2}.rotations", band.rotations[level]
        for i, block in enumerate(self.decoder.blocks):
            for direction in ("time", "band"):
                sub, base = block[direction], f"dec.block{i}.{direction}"
                yield f"{base}.rmvn.alpha", sub.rmvn.alpha
                yield f"{base}.rmvn.beta", sub.rmvn.beta
                yield f"{base}.cell.weight_ih", sub.cell.weight_ih_l0
                yield f"{base}.cell.weight_hh", sub.cell.weight_hh_l0
                yield f"{base}.cell.bias_ih", sub.cell.bias_ih_l0
                yield f"{base}.cell.bias_hh", sub.cell.bias_hh_l0
                yield f"{base}.head.weight", sub.head.weight
                yield f"{base}.head.bias", sub.head.bias
                yield f"{base}.tac.u.weight", sub.tac.u.weight
                yield f"{base}.tac.u.bias", sub.tac.u.bias
                yield f"{base}.tac.q.weight", sub.tac.q.weight
                yield f"{base}.tac.q.bias", sub.tac.q.bias
                yield f"{base}.tac.b.weight", sub.tac.b.weight
                yield f"{base}.tac.b.bias", sub.tac.b.bias
        for k, head in enumerate(self.recon.glu):
            yield f"recon.band{k}.glu.weight", head.weight
            yield f"recon.band{k}.glu.bias", head.bias
        for disc in self.discriminators.discs:
            base = f"disc.r{disc.window}"
            for i, weight in enumerate(disc.convs):
                yield f"{base}.block{i}.weight", weight
                yield f"{base}.block{i}.sn_u", getattr(disc, f"u{i}")
            yield f"{base}.score.weight", disc.score
            yield f"{base}.score.sn_u", disc.score_u
