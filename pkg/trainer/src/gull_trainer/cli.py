"""Trainer command line: train / gradcheck / fixtures."""

from __future__ import annotations

import argparse
import sys

from .configs import ToyTrainConfig


def cmd_train(args) -> int:
    from .train import train_toy
    config = ToyTrainConfig(iterations=args.iterations, seed=args.seed)
    result = train_toy(config, weights_path=args.output, log_every=args.log_every)
    early = result.moving_average(10)
    late = result.moving_average(len(result.losses))
    print(f"loss moving average: iter 10 {early:.4f} -> final {late:.4f} "
          f"({100 * (1 - late / early):.1f}% reduction)")
    if args.output:
        print(f"weights written to {args.output}")
    return 0


def cmd_gradcheck(args) -> int:
    from .gradcheck import run_all
    results = run_all(seed=args.seed)
    failed = False
    for name, err in results.items():
        ok = err <= 1e-3
        failed |= not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: max relative error {err:.2e}")
    return 1 if failed else 0


def cmd_fixtures(args) -> int:
    from .fixtures import emit_fixtures
    written = emit_fixtures(args.output, seed=args.seed)
    for path in written:
        print(path)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gull-trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="toy training on synthetic audio")
    tr.add_argument("--output", default=None, help="write a .gullw here")
    tr.add_argument("--iterations", type=int, default=200)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--log-every", type=int, default=20)
    tr.set_defaults(func=cmd_train)

    gc = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    gc.add_argument("--seed", type=int, default=0)
    gc.set_defaults(func=cmd_gradcheck)

    fx = sub.add_parser("fixtures", help="emit forward-parity fixtures")
    fx.add_argument("output", help="directory for .npz fixtures and toy weights")
    fx.add_argument("--seed", type=int, default=0)
    fx.set_defaults(func=cmd_fixtures)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
