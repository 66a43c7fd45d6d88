"""Parity fixture emission.

Writes one .npz per forward operation containing seeded inputs and this
model's outputs, plus the weight store they were computed from. The codec
side replays every case from the shared store and must match within 1e-5.
Cases cover zero inputs and the elastic extremes w in {1, W}, d in {1, D}.

Fixture keys follow "case{i}__{field}"; a "meta" array holds a JSON blob
with the op name and case count.
"""

from __future__ import annotations

import json
import os

import numpy as np
import torch

from . import losses as tlosses
from .configs import ToyModelSpec
from .model import DISC_WINDOWS, GullModel, stft
from .store import write_store_file

RECON_WINDOWS = (32, 64, 128, 256, 512, 1024, 2048)
RECON_MELS = (5, 10, 20, 40, 80, 160, 320)


def _save(path, op, cases):
    arrays = {"meta": np.frombuffer(
        json.dumps({"op": op, "cases": len(cases)}).encode(), dtype=np.uint8)}
    for i, case in enumerate(cases):
        for field, value in case.items():
            arrays[f"case{i}__{field}"] = np.asarray(value)
    np.savez_compressed(path, **arrays)


def emit_fixtures(out_dir, seed: int = 0, spec: ToyModelSpec | None = None,
                  model: GullModel | None = None) -> list[str]:
    """Write toy weights plus per-op fixtures; returns the file list."""
    os.makedirs(out_dir, exist_ok=True)
    spec = spec or ToyModelSpec()
    if model is None:
        model = GullModel(spec, seed=seed, disc_windows=DISC_WINDOWS)
    model = model.double().eval()
    rng = np.random.default_rng(seed + 12345)
    written = []

    store_path = os.path.join(out_dir, "toy_model.gullw")
    tensors = model.export_tensors()
    write_store_file(store_path, tensors, model.export_metadata())
    written.append(store_path)
    # replay the float32 store into the model so fixture outputs are computed
    # from the exact weights the other side will load
    model.load_tensors(tensors)
    with open(os.path.join(out_dir, "toy_config.txt"), "w") as f:
        f.write(model.export_metadata()["config_text"])
    written.append(os.path.join(out_dir, "toy_config.txt"))

    N = spec.embed_dim
    K = spec.num_bands
    H = spec.num_hierarchies
    W, D = spec.elastic_width, spec.num_decoder_layers
    T = 12

    def unit(v):
        return v / np.maximum(np.linalg.norm(v, axis=-1, keepdims=True), 1e-12)

    with torch.no_grad():
        # gain_shape: random frames per band size, plus a zero frame
        cases = []
        for k in (0, K - 1):
            G = spec.bands.bin_counts[k]
            frame = rng.standard_normal(G) + 1j * rng.standard_normal(G)
            out = model_gain_shape(frame)
            cases.append({"input": frame, "output": out})
        zero = np.zeros(spec.bands.bin_counts[0], dtype=complex)
        cases.append({"input": zero, "output": model_gain_shape(zero)})
        path = os.path.join(out_dir, "gain_shape.npz")
        _save(path, "gain_shape", cases)
        written.append(path)

        # rmvn with the store's band-0 frontend parameters
        band0 = model.frontend.bands[0]
        feat = 2 * spec.bands.bin_counts[0] + 1
        cases = []
        for vec in (rng.standard_normal(feat), np.zeros(feat)):
            out = band0.rmvn(torch.from_numpy(vec)).numpy()
            cases.append({"input": vec, "output": out,
                          "band": np.int64(0), "eps": np.float64(band0.rmvn.eps)})
        path = os.path.join(out_dir, "rmvn.npz")
        _save(path, "rmvn", cases)
        written.append(path)

        # encoder_forward on random and zero embeddings, K_hat in {2, K}
        cases = []
        for k_hat, scale in ((2, 1.0), (K, 1.0), (K, 0.0)):
            E = scale * rng.standard_normal((N, k_hat, T))
            C = model.encoder(torch.from_numpy(E[None]))[0].numpy()
            cases.append({"input": E, "output": C, "k_hat": np.int64(k_hat)})
        path = os.path.join(out_dir, "encoder_forward.npz")
        _save(path, "encoder_forward", cases)
        written.append(path)

        # srvq quantize/dequantize per band at h in {1, H}
        cases = []
        for k in range(K):
            for h in (1, H):
                c = unit(rng.standard_normal((8, N)))
                idx, est = model.srvq.bands[k].quantize(torch.from_numpy(c), h)
                deq = model.srvq.bands[k].dequantize(idx)
                cases.append({"input": c, "band": np.int64(k), "h": np.int64(h),
                              "indices": idx.numpy(),
                              "estimates": torch.stack(est).numpy(),
                              "dequantized": deq.numpy()})
        # identity-rotation replay (the zero-ish case: all indices zero)
        zero_idx = np.zeros((4, H), dtype=np.int64)
        deq = model.srvq.bands[0].dequantize(torch.from_numpy(zero_idx))
        cases.append({"input": np.zeros((0,)), "band": np.int64(0),
                      "h": np.int64(H), "indices": zero_idx,
                      "estimates": np.zeros((0,)), "dequantized": deq.numpy()})
        path = os.path.join(out_dir, "srvq.npz")
        _save(path, "srvq", cases)
        written.append(path)

        # commitment loss
        cases = []
        for scale in (1.0, 0.0):
            C = unit(rng.standard_normal((N, 3, T)).transpose(1, 2, 0)).transpose(2, 0, 1)
            est = np.stack([unit(rng.standard_normal((N, 3, T)).transpose(1, 2, 0))
                            .transpose(2, 0, 1) for _ in range(H)])
            if scale == 0.0:
                est = np.repeat(C[None], H, axis=0)  # zero-distance case
            value = tlosses.commitment_loss(
                torch.from_numpy(C[None]),
                [torch.from_numpy(e[None]) for e in est])
            cases.append({"c": C, "estimates": est, "value": float(value)})
        path = os.path.join(out_dir, "commitment.npz")
        _save(path, "commitment", cases)
        written.append(path)

        # tac weights from decoder block 0 (time), w in {1, W}, plus zeros
        tac = model.decoder.blocks[0]["time"].tac
        cases = []
        for w in (1, W):
            feats = rng.standard_normal((5, W, spec.elastic_aux_dim))
            out = tac(torch.from_numpy(feats), w).numpy()
            cases.append({"input": feats, "w": np.int64(w), "output": out})
        zero_feats = np.zeros((2, W, spec.elastic_aux_dim))
        cases.append({"input": zero_feats, "w": np.int64(W),
                      "output": tac(torch.from_numpy(zero_feats), W).numpy()})
        path = os.path.join(out_dir, "tac.npz")
        _save(path, "tac", cases)
        written.append(path)

        # decoder_forward at the elastic extremes, random and zero input
        cases = []
        for w, d, scale in ((1, 1, 1.0), (1, D, 1.0), (W, 1, 1.0), (W, D, 1.0),
                            (W, D, 0.0)):
            R = scale * rng.standard_normal((N, K, T))
            out = model.decoder(torch.from_numpy(R[None]), w, d)[0].numpy()
            cases.append({"input": R, "w": np.int64(w), "d": np.int64(d),
                          "output": out})
        path = os.path.join(out_dir, "decoder_forward.npz")
        _save(path, "decoder_forward", cases)
        written.append(path)

        # reconstruction heads at K_bar in {2, K}, plus zero embeddings
        cases = []
        for k_bar, scale in ((2, 1.0), (K, 1.0), (K, 0.0)):
            dec = scale * rng.standard_normal((N, k_bar, T))
            spec_bins = model.recon(torch.from_numpy(dec[None]))[0].numpy()
            cases.append({"input": dec, "k_bar": np.int64(k_bar),
                          "output": spec_bins})
        path = os.path.join(out_dir, "reconstruct.npz")
        _save(path, "reconstruct", cases)
        written.append(path)

        # discriminator forward per resolution, random and zero spectrograms
        cases = []
        signal = rng.standard_normal(int(0.15 * spec.operating_sr))
        for win, disc in zip(model.discriminators.windows,
                             model.discriminators.discs):
            spec_bins = stft(torch.from_numpy(signal[None]), win, win // 2)[0]
            score, feats = disc(spec_bins[None])
            case = {"window": np.int64(win), "input": spec_bins.numpy(),
                    "score": score[0].numpy()}
            for j, f in enumerate(feats):
                case[f"feat{j}"] = f[0].numpy().astype(np.float32)
            cases.append(case)
        zero_spec = np.zeros((129, 6), dtype=complex)
        score, feats = model.discriminators.discs[0](torch.from_numpy(zero_spec)[None])
        case = {"window": np.int64(model.discriminators.windows[0]),
                "input": zero_spec, "score": score[0].numpy()}
        for j, f in enumerate(feats):
            case[f"feat{j}"] = f[0].numpy().astype(np.float32)
        cases.append(case)
        path = os.path.join(out_dir, "discriminator.npz")
        _save(path, "discriminator", cases)
        written.append(path)

        # loss values: lsgan, reconstruction, feature matching, total
        cases = []
        for scale in (1.0, 0.0):
            reals = [scale * rng.standard_normal((1, 1, 3, 4)) for _ in range(5)]
            fakes = [scale * rng.standard_normal((1, 1, 3, 4)) for _ in range(5)]
            d_loss = tlosses.lsgan_d_loss([torch.from_numpy(r) for r in reals],
                                          [torch.from_numpy(f) for f in fakes])
            g_loss = tlosses.lsgan_g_loss([torch.from_numpy(f) for f in fakes])
            case = {"d_loss": float(d_loss), "g_loss": float(g_loss)}
            for i in range(5):
                case[f"real{i}"] = reals[i]
                case[f"fake{i}"] = fakes[i]
            cases.append(case)
        path = os.path.join(out_dir, "lsgan.npz")
        _save(path, "lsgan", cases)
        written.append(path)

        cases = []
        x = synth_signal(rng, spec.operating_sr)
        for decoded in (synth_signal(rng, spec.operating_sr), np.zeros_like(x)):
            value = tlosses.reconstruction_loss(
                torch.from_numpy(decoded[None]), torch.from_numpy(x[None]),
                spec.operating_sr, RECON_WINDOWS, RECON_MELS)
            cases.append({"decoded": decoded, "reference": x,
                          "sample_rate": np.int64(spec.operating_sr),
                          "value": float(value)})
        path = os.path.join(out_dir, "recon_loss.npz")
        _save(path, "recon_loss", cases)
        written.append(path)

        cases = []
        real_feats = [[rng.standard_normal((1, 2, 3, 4)) for _ in range(6)]
                      for _ in range(5)]
        for fake_feats in (
            [[rng.standard_normal((1, 2, 3, 4)) for _ in range(6)] for _ in range(5)],
            real_feats,  # zero-distance case
        ):
            value = tlosses.feature_matching_loss(
                [[torch.from_numpy(l) for l in d] for d in fake_feats],
                [[torch.from_numpy(l) for l in d] for d in real_feats])
            case = {"value": float(value)}
            for i in range(5):
                for j in range(6):
                    case[f"real{i}_{j}"] = real_feats[i][j]
                    case[f"fake{i}_{j}"] = fake_feats[i][j]
            cases.append(case)
        path = os.path.join(out_dir, "feature_matching.npz")
        _save(path, "feature_matching", cases)
        written.append(path)

        cases = []
        for parts in (rng.uniform(0, 3, 4), np.zeros(4)):
            rec, fm, adv, commit = parts
            cases.append({"parts": parts,
                          "value": float(rec + fm + adv + 0.2 * commit)})
        path = os.path.join(out_dir, "total_loss.npz")
        _save(path, "total_loss", cases)
        written.append(path)

    return written


def model_gain_shape(frame: np.ndarray) -> np.ndarray:
    from .model import gain_shape
    return gain_shape(torch.from_numpy(np.asarray(frame, dtype=complex))[None])[0].numpy()


def synth_signal(rng, sr):
    from . import synth
    return synth.make_segment(rng, int(0.4 * sr), sr)
