#!/usr/bin/env python3
"""End-to-end demo: synthesize a tone, encode, decode at several operating
points, and report bitrates and durations.

    python scripts/demo_roundtrip.py --input-sr 16000 --target-sr 48000
"""

import argparse

import numpy as np

from gull import bitstream, codec
from gull.config import bitrate_bps, build_config
from gull.dsp import AudioBuffer
from gull.weights import random_param_store


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", choices=["speech", "music"], default="speech")
    parser.add_argument("--input-sr", type=int, default=16000)
    parser.add_argument("--target-sr", type=int, default=None)
    parser.add_argument("--seconds", type=float, default=1.0)
    parser.add_argument("--hierarchies", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    config = build_config(args.model)
    params = codec.bind_params(random_param_store(config, seed=args.seed))
    t = np.arange(int(args.input_sr * args.seconds)) / args.input_sr
    audio = AudioBuffer(0.4 * np.sin(2 * np.pi * 440 * t)
                        + 0.1 * np.sin(2 * np.pi * 1320 * t), args.input_sr)

    header, frames = codec.encode(audio, params, h=args.hierarchies,
                                  target_sr=args.target_sr)
    blob = bitstream.serialize(header, frames)
    bps = bitrate_bps(config, args.input_sr, args.hierarchies)
    print(f"input: {audio.duration:.2f} s at {audio.sample_rate} Hz")
    print(f"stream: {len(blob)} bytes, {frames.frame_count} frames, "
          f"{bps / 1000:.1f} kbps payload")
    for w, d in ((1, 1), (1, 4), (10, 4)):
        out = codec.decode(header, frames, params, w=w, d=d)
        print(f"decode w={w:2d} d={d}: {out.duration:.2f} s "
              f"at {out.sample_rate} Hz, peak {np.abs(out.samples).max():.3f}")


if __name__ == "__main__":
    main()
