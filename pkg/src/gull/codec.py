"""End-to-end encode/decode pipelines binding a ParamStore to the modules.

Encoding: resample to the operating rate, STFT, split bands, embed the valid
subbands, run the encoder, quantize each (band, frame) embedding through h
hierarchies, pack the indices. Decoding replays the indices through the
codebooks and rotations, zero-pads up to the target band count, runs the
elastic decoder at the chosen (w, d), reconstructs the spectrogram, inverts
the STFT, and resamples to the target rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bitstream, config as cfg, dsp, frontend, srvq
from .decoder import (DecoderState, ElasticBlockParams, ElasticLayerParams,
                      ReconHeadParams, TacParams, decoder_forward, reconstruct)
from .encoder import (BsrnnBlockParams, EncoderState, LstmParams,
                      ResidualRnnParams, encoder_forward)
from .errors import ConfigError, WeightsShapeError
from .frontend import BandFrontendParams, FrontendParams, RmvnParams
from .srvq import Codebook, RotationBank
from .weights import DEFAULT_RMVN_EPS, ParamStore, validate_shapes


@dataclass
class CodecParams:
    config: cfg.ModelConfig
    frontend: FrontendParams
    encoder: list[BsrnnBlockParams]
    codebooks: list[Codebook]
    rotations: list[RotationBank]
    decoder: list[ElasticBlockParams]
    recon: ReconHeadParams


def _rmvn_params(store: ParamStore, base: str, eps: float) -> RmvnParams:
    return RmvnParams(store.get_f64(f"{base}.alpha"), store.get_f64(f"{base}.beta"), eps)


def _lstm_params(store: ParamStore, base: str) -> LstmParams:
    return LstmParams(
        store.get_f64(f"{base}.weight_ih"), store.get_f64(f"{base}.weight_hh"),
        store.get_f64(f"{base}.bias_ih"), store.get_f64(f"{base}.bias_hh"))


def bind_params(store: ParamStore, config: cfg.ModelConfig | None = None,
                check_hash: bool = True) -> CodecParams:
    """Materialize float64 module parameters from a weight store.

    With no explicit config the store's embedded config text is used; when
    both are present the store's config hash must match.
    """
    meta = store.metadata
    if config is None:
        if "config_text" not in meta:
            raise WeightsShapeError("store has no embedded config; pass one explicitly")
        config = cfg.from_text(str(meta["config_text"]))
    if check_hash and "config_hash" in meta and meta["config_hash"] != cfg.config_hash(config):
        raise WeightsShapeError("weights were trained for a different config")
    report = validate_shapes(store, config)
    if report.missing or report.mismatched:
        problems = report.missing + report.mismatched
        raise WeightsShapeError(f"store does not satisfy config contract: {problems[:5]}")
    eps = float(meta.get("rmvn_eps", DEFAULT_RMVN_EPS))

    bands = []
    for k in range(config.num_bands):
        base = f"frontend.band{k}"
        bands.append(BandFrontendParams(
            rmvn=_rmvn_params(store, f"{base}.rmvn", eps),
            weight=store.get_f64(f"{base}.embed.weight"),
            bias=store.get_f64(f"{base}.embed.bias")))

    encoder = []
    for i in range(config.num_encoder_layers):
        parts = {}
        for direction in ("time", "band"):
            base = f"enc.block{i}.{direction}"
            parts[direction] = ResidualRnnParams(
                rmvn=_rmvn_params(store, f"{base}.rmvn", eps),
                cell=_lstm_params(store, f"{base}.cell"),
                proj_weight=store.get_f64(f"{base}.proj.weight"),
                proj_bias=store.get_f64(f"{base}.proj.bias"))
        encoder.append(BsrnnBlockParams(time=parts["time"], band=parts["band"]))

    codebooks, rotations = [], []
    for k in range(config.num_bands):
        book = Codebook(
            codes=store.get_f64(f"vq.band{k}.codebook"),
            ema_size=store.get_f64(f"vq.band{k}.ema_size"),
            ema_sum=store.get_f64(f"vq.band{k}.ema_sum"),
            age=(store.get_f64(f"vq.band{k}.age").astype(np.int64)
                 if f"vq.band{k}.age" in store else
                 np.zeros(2 ** config.bits_per_hierarchy[0], dtype=np.int64)))
        codebooks.append(book)
        rotations.append(RotationBank([
            store.get_f64(f"vq.band{k}.h{h}.rotations")
            for h in range(2, config.num_hierarchies + 1)]))

    decoder = []
    for i in range(config.num_decoder_layers):
        parts = {}
        for direction in ("time", "band"):
            base = f"dec.block{i}.{direction}"
            parts[direction] = ElasticLayerParams(
                rmvn=_rmvn_params(store, f"{base}.rmvn", eps),
                cell=_lstm_params(store, f"{base}.cell"),
                head_weight=store.get_f64(f"{base}.head.weight"),
                head_bias=store.get_f64(f"{base}.head.bias"),
                tac=TacParams(
                    store.get_f64(f"{base}.tac.u.weight"), store.get_f64(f"{base}.tac.u.bias"),
                    store.get_f64(f"{base}.tac.q.weight"), store.get_f64(f"{base}.tac.q.bias"),
                    store.get_f64(f"{base}.tac.b.weight"), store.get_f64(f"{base}.tac.b.bias")),
                embed_dim=config.embed_dim,
                width=config.elastic_width)
        decoder.append(ElasticBlockParams(time=parts["time"], band=parts["band"]))

    recon = ReconHeadParams(
        weights=[store.get_f64(f"recon.band{k}.glu.weight") for k in range(config.num_bands)],
        biases=[store.get_f64(f"recon.band{k}.glu.bias") for k in range(config.num_bands)])

    return CodecParams(config, FrontendParams(bands), encoder, codebooks,
                       rotations, decoder, recon)


def encode_embeddings(audio: dsp.AudioBuffer, params: CodecParams) -> np.ndarray:
    """Audio at any supported rate -> unit-norm embeddings C (N, K_hat, T)."""
    config = params.config
    k_hat = cfg.valid_subbands(config, audio.sample_rate)
    operating = dsp.resample(audio, config.operating_sr)
    spec = dsp.stft(operating, config)
    subbands = dsp.split_bands(spec, config.band_layout)
    E = frontend.embed_subbands(subbands, params.frontend, k_hat)
    return encoder_forward(E, params.encoder, EncoderState.zeros(
        len(params.encoder), k_hat, params.encoder[0].time.cell.hidden_size))


def quantize_embeddings(C: np.ndarray, params: CodecParams, h: int) -> np.ndarray:
    """Quantize C (N, K_hat, T) -> indices (T, K_hat, h)."""
    _, k_hat, T = C.shape
    indices = np.empty((T, k_hat, h), dtype=np.int64)
    for k in range(k_hat):
        idx, _ = srvq.quantize_batch(C[:, k, :].T, params.codebooks[k],
                                     params.rotations[k], h)
        indices[:, k, :] = idx
    return indices


def dequantize_indices(indices: np.ndarray, params: CodecParams) -> np.ndarray:
    """Replay indices (T, K_hat, h) -> embeddings R (N, K_hat, T)."""
    T, k_hat, _ = indices.shape
    N = params.config.embed_dim
    R = np.empty((N, k_hat, T))
    for k in range(k_hat):
        R[:, k, :] = srvq.dequantize(indices[:, k, :], params.codebooks[k],
                                     params.rotations[k]).T
    return R


def encode(audio: dsp.AudioBuffer, params: CodecParams, h: int,
           target_sr: int | None = None) -> tuple[bitstream.StreamHeader,
                                                  bitstream.FrameCodes]:
    """Full encode pipeline to a stream header and packed-ready frame codes."""
    config = params.config
    if not 1 <= h <= config.num_hierarchies:
        raise ConfigError(f"hierarchy count {h} outside 1..{config.num_hierarchies}")
    if target_sr is None:
        target_sr = audio.sample_rate
    cfg.valid_subbands(config, target_sr)  # validates the rate
    if target_sr < audio.sample_rate:
        raise ConfigError("target rate below input rate")
    C = encode_embeddings(audio, params)
    indices = quantize_embeddings(C, params, h)
    header = bitstream.StreamHeader(
        model_type=config.model_type, input_sr=audio.sample_rate,
        target_sr=target_sr, num_hierarchies=h, frame_count=indices.shape[0])
    return header, bitstream.FrameCodes(indices)


def decode(header: bitstream.StreamHeader, frames: bitstream.FrameCodes,
           params: CodecParams, w: int, d: int,
           target_sr: int | None = None) -> dsp.AudioBuffer:
    """Full decode pipeline; target_sr overrides the header's intent."""
    config = params.config
    if header.model_type != config.model_type:
        raise ConfigError(
            f"stream is {header.model_type}, weights are {config.model_type}")
    if target_sr is None:
        target_sr = header.target_sr
    if target_sr < header.input_sr:
        raise ConfigError("target rate below the stream's input rate")
    k_bar = cfg.valid_subbands(config, target_sr)
    R = dequantize_indices(frames.indices, params)
    R = srvq.pad_superres(R, k_bar)
    decoded = decoder_forward(R, params.decoder, w, d, DecoderState.zeros(
        len(params.decoder), k_bar, params.decoder[0].time.cell.hidden_size))
    spec_bins = reconstruct(decoded, params.recon, config.band_layout)
    spec = dsp.Spectrogram(spec_bins, config.window_ms, config.hop_ms,
                           config.operating_sr)
    audio = dsp.istft(spec, config)
    return dsp.resample(audio, target_sr)


def decode_full(codes: bytes, params: CodecParams, w: int, d: int,
                target_sr: int | None = None) -> dsp.AudioBuffer:
    """Decode a serialized .gull byte stream."""
    header, frames = bitstream.deserialize(codes)
    return decode(header, frames, params, w, d, target_sr)
