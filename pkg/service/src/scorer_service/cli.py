"""Command line for the scoring service: serve a model or fine-tune one.

Flags fall back to environment variables: SCORER_SERVICE_MODEL,
SCORER_SERVICE_HOST, SCORER_SERVICE_PORT, SCORER_SERVICE_MAX_BATCH.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .app import ServiceConfig, serve
from .finetune import Hyperparameters, finetune, load_pair_corpus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scorer-service", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("serve", help="answer /score and /health over HTTP")
    p.add_argument("--model", default=os.environ.get("SCORER_SERVICE_MODEL"))
    p.add_argument("--host", default=os.environ.get("SCORER_SERVICE_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("SCORER_SERVICE_PORT", "8591")))
    p.add_argument(
        "--max-batch-size",
        type=int,
        default=int(os.environ.get("SCORER_SERVICE_MAX_BATCH", "512")),
    )

    p = sub.add_parser("finetune", help="train the pair classifier on a pair corpus")
    p.add_argument("--pairs", required=True, help="pair corpus JSONL")
    p.add_argument("--out", required=True, help="model artifact output path")
    p.add_argument("--base-model", help="existing artifact to continue from")
    p.add_argument("--learning-rate", type=float, default=Hyperparameters.learning_rate)
    p.add_argument("--batch-size", type=int, default=Hyperparameters.batch_size)
    p.add_argument("--epochs", type=int, default=Hyperparameters.epochs)
    p.add_argument("--holdout", type=float, default=Hyperparameters.holdout)
    p.add_argument("--seed", type=int, default=Hyperparameters.seed)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    if args.cmd == "serve":
        if not args.model:
            print("error: --model (or SCORER_SERVICE_MODEL) is required", file=sys.stderr)
            return 1
        config = ServiceConfig(
            host=args.host,
            port=args.port,
            model_path=args.model,
            max_batch_size=args.max_batch_size,
        )
        serve(config)
        return 0
    try:
        corpus = load_pair_corpus(args.pairs)
        hp = Hyperparameters(
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            epochs=args.epochs,
            holdout=args.holdout,
            seed=args.seed,
        )
        _, metrics = finetune(corpus, args.base_model, hp, out_path=args.out)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"saved {args.out}; final metrics: {metrics['final']}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
