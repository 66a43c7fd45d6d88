#!/usr/bin/env python3
"""Write a .gullw file with random (untrained) weights for a model variant.

Useful for exercising the full CLI pipeline without a trainer:

    python scripts/make_random_weights.py speech /tmp/speech.gullw --seed 7
"""

import argparse

from gull.config import build_config
from gull.weights import random_param_store, save_file


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("model_type", choices=["speech", "music"])
    parser.add_argument("output")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--discriminators", action="store_true",
                        help="include the optional discriminator stacks")
    args = parser.parse_args()
    config = build_config(args.model_type)
    store = random_param_store(config, seed=args.seed,
                               include_discriminators=args.discriminators)
    save_file(store, args.output)
    print(f"wrote {len(store.tensors)} tensors to {args.output}")


if __name__ == "__main__":
    main()
