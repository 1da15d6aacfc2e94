"""Command-line entry point: ``opinionrec [--config F] [--seed N] [--out D] <stage>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .config import ConfigError, load_config
from .corpus import DatasetError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
EXIT_DATA = 5

STAGES = ("preprocess", "train", "extract", "recommend", "evaluate", "pipeline")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opinionrec", description=__doc__)
    parser.add_argument("--config", help="flat JSON configuration file")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="stage", required=True)
    for name in STAGES:
        p = sub.add_parser(name)
        if name == "recommend":
            p.add_argument("--user", help="only this user (default: every user)")
            p.add_argument("-n", type=int, help="list length (default: config top_n)")
    return parser


def _summary(stage: str, result: dict) -> str:
    if stage == "preprocess":
        return (f"preprocess: {result['n_records']} records ({result['n_train']} train, "
                f"{result['n_test']} test), skipped {result['skipped']}, "
                f"malformed {result['malformed']}, vocabulary {result['vocab_size']}")
    if stage == "train":
        loss = result["epoch_losses"][-1] if result["epoch_losses"] else float("nan")
        return (f"train: {result['n_train']} samples + {result['n_synthetic']} synthetic, "
                f"{result['steps']} steps, final loss {loss:.4f}")
    if stage == "extract":
        return (f"extract: {result['n_mentions']} mentions in {len(result['clusters'])} clusters, "
                f"CP residual {result['cp_residual']:.4g}")
    if stage == "recommend":
        return f"recommend: top-{result['n']} lists for {result['n_users']} users"
    if stage == "evaluate":
        return json.dumps({k: result[k] for k in ("mae", "rmse", "precision", "recall", "f1",
                                                  "accuracy", "n_test")})
    return "\n".join(_summary(k, v) for k, v in result.items())


def run(args: argparse.Namespace) -> dict:
    cfg = load_config(args.config, {"seed": args.seed, "out": args.out})
    if args.stage == "recommend":
        return pipeline.cmd_recommend(cfg, user=args.user, n=args.n)
    return getattr(pipeline, f"cmd_{args.stage}")(cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArithmeticError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(_summary(args.stage, result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
