"""Command-line tools: encode, decode, inspect, eval.

Exit codes: 0 success, 2 usage/config errors, 3 audio I/O errors,
4 bitstream format errors, 5 weights errors. Output files are written via a
temporary path and renamed, so failures never leave partial files behind.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np
from scipy.io import wavfile

from . import bitstream, codec, config as cfg, losses
from .dsp import AudioBuffer
from .errors import (AudioIOError, BitstreamError, ConfigError, GullError,
                     WeightsError)
from .weights import load_file

SNR_CAP_DB = 99.0

EXIT_CODES = (
    (ConfigError, 2),
    (AudioIOError, 3),
    (BitstreamError, 4),
    (WeightsError, 5),
)


def read_wav(path: str) -> AudioBuffer:
    try:
        sr, data = wavfile.read(path)
    except FileNotFoundError:
        raise AudioIOError(f"no such file: {path}") from None
    except ValueError as e:
        raise AudioIOError(f"unreadable WAV {path}: {e}") from e
    if data.ndim != 1:
        raise AudioIOError(f"{path}: only mono WAV input is supported")
    if data.dtype == np.int16:
        samples = data / 32768.0
    elif data.dtype == np.int32:
        samples = data / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise AudioIOError(f"{path}: unsupported sample format {data.dtype}")
    return AudioBuffer(samples, int(sr))


def write_wav(path: str, audio: AudioBuffer, pcm16: bool = False) -> None:
    if pcm16:
        data = np.clip(np.round(audio.samples * 32768.0), -32768, 32767).astype(np.int16)
    else:
        data = audio.samples.astype(np.float32)
    _atomic_write(path, lambda tmp: wavfile.write(tmp, audio.sample_rate, data))


def _atomic_write(path: str, writer) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gull-tmp-")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_codec(weights_path: str) -> codec.CodecParams:
    try:
        store = load_file(weights_path)
    except FileNotFoundError:
        raise WeightsError(f"no such file: {weights_path}") from None
    return codec.bind_params(store)


def _resolve_h(args, config: cfg.ModelConfig, input_sr: int) -> int:
    if args.hierarchies is not None:
        if not 1 <= args.hierarchies <= config.num_hierarchies:
            raise ConfigError(f"--hierarchies outside 1..{config.num_hierarchies}")
        return args.hierarchies
    if args.bitrate is not None:
        want = int(round(args.bitrate * 1000))
        for h in range(1, config.num_hierarchies + 1):
            if cfg.bitrate_bps(config, input_sr, h) == want:
                return h
        options = [cfg.bitrate_bps(config, input_sr, h) / 1000
                   for h in range(1, config.num_hierarchies + 1)]
        raise ConfigError(f"no hierarchy count gives {args.bitrate} kbps at "
                          f"{input_sr} Hz (available: {options})")
    return config.num_hierarchies


def cmd_encode(args) -> int:
    params = _load_codec(args.weights)
    audio = read_wav(args.input)
    if audio.sample_rate not in params.config.supported_input_srs:
        raise ConfigError(
            f"{params.config.model_type} weights do not support "
            f"{audio.sample_rate} Hz input "
            f"(supported: {list(params.config.supported_input_srs)})")
    h = _resolve_h(args, params.config, audio.sample_rate)
    header, frames = codec.encode(audio, params, h, args.target_sr)
    data = bitstream.serialize(header, frames)
    _atomic_write(args.output, lambda tmp: open(tmp, "wb").write(data))
    bps = cfg.bitrate_bps(params.config, audio.sample_rate, h)
    print(f"encoded {frames.frame_count} frames at h={h}: {bps / 1000:.1f} kbps "
          f"payload ({len(data)} bytes with header)")
    return 0


def cmd_decode(args) -> int:
    params = _load_codec(args.weights)
    try:
        with open(args.input, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise BitstreamError(f"no such file: {args.input}") from None
    audio = codec.decode_full(data, params, args.width, args.depth, args.target_sr)
    write_wav(args.output, audio, pcm16=args.pcm16)
    print(f"decoded {audio.duration:.3f} s at {audio.sample_rate} Hz "
          f"(w={args.width}, d={args.depth})")
    return 0


def cmd_inspect(args) -> int:
    try:
        with open(args.input, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise BitstreamError(f"no such file: {args.input}") from None
    header, frames = bitstream.deserialize(data)
    k_hat = bitstream.expected_k_hat(header)
    config = cfg.build_config(header.model_type)
    duration = header.frame_count / config.frame_rate
    print(f"model_type: {header.model_type}")
    print(f"input_sr: {header.input_sr}")
    print(f"target_sr: {header.target_sr}")
    print(f"hierarchies: {header.num_hierarchies}")
    print(f"frames: {header.frame_count}")
    print(f"valid_subbands: {k_hat}")
    print(f"duration_s: {duration:.2f}")
    if header.frame_count:
        bps = cfg.bitrate_bps(config, header.input_sr, header.num_hierarchies)
        print(f"bitrate_kbps: {bps / 1000:.1f}")
    return 0


def align_by_correlation(reference: np.ndarray, decoded: np.ndarray,
                         max_shift: int) -> int:
    """Shift (in samples) of decoded relative to reference maximizing correlation."""
    best_shift, best = 0, -np.inf
    for shift in range(-max_shift, max_shift + 1):
        if shift >= 0:
            a, b = reference[shift:], decoded[:len(decoded) - shift or None]
        else:
            a, b = reference[:shift], decoded[-shift:]
        n = min(len(a), len(b))
        if n == 0:
            continue
        score = float(np.dot(a[:n], b[:n]))
        if score > best:
            best, best_shift = score, shift
    return best_shift


def snr_db(reference: np.ndarray, decoded: np.ndarray) -> float:
    n = min(len(reference), len(decoded))
    x, s = reference[:n], decoded[:n]
    err = float(np.sum((x - s) ** 2))
    sig = float(np.sum(x ** 2))
    if err <= sig * 10 ** (-SNR_CAP_DB / 10):
        return SNR_CAP_DB
    return 10.0 * np.log10(sig / err)


def cmd_eval(args) -> int:
    ref = read_wav(args.reference)
    dec = read_wav(args.decoded)
    if ref.sample_rate != dec.sample_rate:
        raise ConfigError("reference/decoded sample rates differ; resample first")
    window = int(ref.sample_rate * 0.020)
    shift = align_by_correlation(ref.samples, dec.samples, window)
    if shift >= 0:
        x, s = ref.samples[shift:], dec.samples
    else:
        x, s = ref.samples, dec.samples[-shift:]
    print(f"alignment_shift: {shift} samples")
    print(f"snr_db: {snr_db(x, s):.2f}")
    n = min(len(x), len(s))
    for window_size, dist in losses.spectral_distances(s[:n], x[:n]).items():
        print(f"spectral_mae_w{window_size}: {dist:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gull", description="Gull audio codec")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="WAV -> .gull stream")
    enc.add_argument("input")
    enc.add_argument("output")
    enc.add_argument("--weights", required=True, help=".gullw parameter file")
    enc.add_argument("--hierarchies", type=int, default=None, metavar="H",
                     help="SRVQ hierarchy count 1..5 (default: all)")
    enc.add_argument("--bitrate", type=float, default=None, metavar="KBPS",
                     help="select hierarchy count by payload bitrate")
    enc.add_argument("--target-sr", type=int, default=None,
                     help="intended output rate stored in the header")
    enc.set_defaults(func=cmd_encode)

    dec = sub.add_parser("decode", help=".gull stream -> WAV")
    dec.add_argument("input")
    dec.add_argument("output")
    dec.add_argument("--weights", required=True)
    dec.add_argument("--width", "-w", type=int, default=10, help="elastic width 1..10")
    dec.add_argument("--depth", "-d", type=int, default=4, help="elastic depth 1..4")
    dec.add_argument("--target-sr", type=int, default=None,
                     help="override the header's target rate")
    dec.add_argument("--pcm16", action="store_true", help="write 16-bit PCM")
    dec.set_defaults(func=cmd_decode)

    ins = sub.add_parser("inspect", help="print .gull header fields")
    ins.add_argument("input")
    ins.set_defaults(func=cmd_inspect)

    ev = sub.add_parser("eval", help="SNR and spectral distances vs a reference")
    ev.add_argument("reference")
    ev.add_argument("decoded")
    ev.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GullError as e:
        print(f"error: {e}", file=sys.stderr)
        for err_type, code in EXIT_CODES:
            if isinstance(e, err_type):
                return code
        return 1


if __name__ == "__main__":
    sys.exit(main())
