"""Toy-scale adversarial training loop.

Per iteration: sample a hierarchy depth, an input band count (emulating the
input sample rate) and a target band count, encode/quantize/decode at a
sampled (w, d) and at full (W, D), update the discriminators with the LSGAN
objective, then the codec with reconstruction + feature-matching +
adversarial + commitment losses. Codebooks learn by EMA with dead-code
replacement, outside the gradient path; a straight-through estimator carries
decoder gradients back to the encoder across the quantizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from . import losses, synth
from .configs import ToyTrainConfig
from .model import GullModel, stft, istft
from .store import write_store_file


class DivergenceError(RuntimeError):
    pass


@dataclass
class TrainResult:
    model: GullModel
    losses: list[float] = field(default_factory=list)
    parts: list[dict] = field(default_factory=list)

    def moving_average(self, upto: int, window: int = 10) -> float:
        chunk = self.losses[max(0, upto - window):upto]
        return float(np.mean(chunk))


def _config_schedule(spec, rng) -> list[tuple[int, int, int, int, int]]:
    """Balanced deck of (h, k_hat, k_bar, w, d) combinations.

    Repeating one shuffled deck keeps the mix of hierarchy depths, band
    counts, and decoder sizes identical in every loss-curve window, so
    moving-average comparisons measure learning rather than which random
    configurations a window happened to draw. Audio stays freshly random
    every iteration.
    """
    H, W, D = spec.num_hierarchies, spec.elastic_width, spec.num_decoder_layers
    counts = sorted({spec.valid_subbands(sr) for sr in spec.supported_input_srs})
    pairs = [(a, b) for a in counts for b in counts if b >= a]
    deck = []
    for i in range(10):
        k_hat, k_bar = pairs[int(rng.integers(len(pairs)))] if i % 3 == 0             else (counts[-1], counts[-1])
        deck.append((1 + i % H, k_hat, k_bar,
                     1 + int(rng.integers(W)), 1 + int(rng.integers(D))))
    rng.shuffle(deck)
    return deck


def _band_limit(model: GullModel, x: torch.Tensor, k_bar: int) -> torch.Tensor:
    """Zero spectral content above the k_bar-th subband edge."""
    spec = model.spec
    if k_bar >= spec.num_bands:
        return x
    keep = sum(spec.bands.bin_counts[:k_bar])
    bins = stft(x, spec.window_size, spec.hop_size)
    bins = torch.cat([bins[:, :keep], torch.zeros_like(bins[:, keep:])], dim=1)
    return istft(bins, spec.window_size, spec.hop_size)[:, :x.shape[1]]


def train_toy(config: ToyTrainConfig, weights_path=None,
              log_every: int = 0) -> TrainResult:
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    replace_gen = torch.Generator().manual_seed(config.seed + 1)

    spec = config.model
    dtype = torch.float32 if config.train_dtype == "float32" else torch.float64
    model = GullModel(spec, eps=config.rmvn_eps, seed=config.seed,
                      disc_windows=config.disc_windows).to(dtype)
    codec_params = [p for name, p in model.named_parameters()
                    if not name.startswith("discriminators")]
    disc_params = [p for name, p in model.named_parameters()
                   if name.startswith("discriminators")]
    opt_codec = torch.optim.AdamW(codec_params, lr=config.lr_codec,
                                  betas=(0.9, 0.99))
    opt_disc = torch.optim.AdamW(disc_params, lr=config.lr_disc,
                                 betas=(0.9, 0.99))

    W, D = spec.elastic_width, spec.num_decoder_layers
    seg = int(config.segment_seconds * spec.operating_sr)
    schedule = _config_schedule(spec, rng)
    # fixed cyclic pool: iteration i replays case i mod 10, so every
    # 10-iteration window of the loss curve averages the exact same cases
    # and moving-average comparisons isolate parameter learning
    pool = []
    for h, k_hat, k_bar, w, d in schedule:
        max_freq = spec.bands.band_edges_hz[k_hat - 1][1] * 0.95
        x = torch.from_numpy(synth.make_batch(rng, config.batch_size, seg,
                                              spec.operating_sr, max_freq)).to(dtype)
        pool.append((h, k_hat, k_bar, w, d, x))

    result = TrainResult(model)
    for iteration in range(config.iterations):
        h, k_hat, k_bar, w, d, x = pool[iteration % len(pool)]
        with torch.no_grad():
            target = _band_limit(model, x, k_bar)
        valid_ratio = sum(spec.bands.bin_counts[:k_bar]) / spec.num_bins

        C = model.encode(x, k_hat)
        R_q, indices, estimates = model.srvq(C, h)
        R = C + (R_q - C).detach()  # straight-through into the decoder
        fake_sampled = model.decode(R, w, d, k_bar)[:, :seg]
        fake_full = model.decode(R, W, D, k_bar)[:, :seg]

        # discriminator step (fakes detached)
        real_scores, _ = model.discriminators(target, valid_ratio, True)
        sampled_scores = model.discriminators(fake_sampled.detach(), valid_ratio)[0]
        full_scores = model.discriminators(fake_full.detach(), valid_ratio)[0]
        d_loss = (losses.lsgan_d_loss(real_scores, sampled_scores)
                  + losses.lsgan_d_loss(real_scores, full_scores))
        opt_disc.zero_grad()
        d_loss.backward()
        opt_disc.step()

        # codec step
        rec = (losses.reconstruction_loss(fake_sampled, target, spec.operating_sr,
                                          config.recon_windows, config.recon_mels)
               + losses.reconstruction_loss(fake_full, target, spec.operating_sr,
                                            config.recon_windows, config.recon_mels))
        fs_scores, fs_feats = model.discriminators(fake_sampled, valid_ratio)
        ff_scores, ff_feats = model.discriminators(fake_full, valid_ratio)
        with torch.no_grad():
            real_scores, real_feats = model.discriminators(target, valid_ratio)
        fm = (losses.feature_matching_loss(fs_feats, real_feats)
              + losses.feature_matching_loss(ff_feats, real_feats))
        adv = losses.lsgan_g_loss(fs_scores) + losses.lsgan_g_loss(ff_scores)
        commit = losses.commitment_loss(C, estimates)
        total = rec + fm + adv + config.commit_weight * commit
        if not torch.isfinite(total):
            raise DivergenceError(
                f"non-finite generator loss at iteration {iteration}: "
                f"rec={float(rec):.3g} fm={float(fm):.3g} adv={float(adv):.3g} "
                f"commit={float(commit):.3g}")
        opt_codec.zero_grad()
        total.backward()
        opt_codec.step()

        # EMA codebook learning on the valid subbands
        with torch.no_grad():
            for k in range(k_hat):
                flat = C[:, :, k, :].permute(0, 2, 1).reshape(-1, spec.embed_dim)
                model.srvq.bands[k].ema_update(
                    indices[:, :, k, 0].reshape(-1), flat,
                    config.ema_decay, config.laplace_eps)
                model.srvq.bands[k].replace_dead(flat, replace_gen)

        result.losses.append(float(total.detach()))
        result.parts.append({
            "rec": float(rec.detach()), "fm": float(fm.detach()),
            "adv": float(adv.detach()), "commit": float(commit.detach())})
        if log_every and (iteration + 1) % log_every == 0:
            p = result.parts[-1]
            print(f"iter {iteration + 1:4d}  total {result.losses[-1]:8.4f}  "
                  f"rec {p['rec']:7.4f}  fm {p['fm']:6.4f}  "
                  f"adv {p['adv']:6.4f}  commit {p['commit']:6.4f}")

    if weights_path is not None:
        write_store_file(weights_path, model.export_tensors(),
                         model.export_metadata(config))
    return result
