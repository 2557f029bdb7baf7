"""CLI: train an adapter on a corpus, or serve one over HTTP."""

from __future__ import annotations

import argparse
import logging
import sys

from .train import TrainSpec, train_adapter


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="sft-harness")
    sub = parser.add_subparsers(dest="command", required=True)

    train_p = sub.add_parser("train")
    train_p.add_argument("--corpus", required=True)
    train_p.add_argument("--out", required=True)
    train_p.add_argument("--base-model", default="tiny-v1")
    train_p.add_argument("--rank", type=int, default=16)
    train_p.add_argument("--alpha", type=int, default=32)
    train_p.add_argument("--lr", type=float, default=1e-4)
    train_p.add_argument("--epochs", type=int, default=1)
    train_p.add_argument("--batch-size", type=int, default=2)
    train_p.add_argument("--grad-accum", type=int, default=4)
    train_p.add_argument("--steps", type=int, default=None, help="cap on optimizer steps")
    train_p.add_argument("--seed", type=int, default=0)
    train_p.add_argument(
        "--tasks",
        nargs="+",
        default=None,
        help="restrict training to these tasks (separated-variant runs)",
    )

    serve_p = sub.add_parser("serve")
    serve_p.add_argument("--adapter", required=True)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8731)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "train":
        spec = TrainSpec(
            corpus_path=args.corpus,
            base_model=args.base_model,
            rank=args.rank,
            alpha=args.alpha,
            lr=args.lr,
            epochs=args.epochs,
            batch_size=args.batch_size,
            grad_accum=args.grad_accum,
            max_steps=args.steps,
            seed=args.seed,
            tasks=tuple(args.tasks) if args.tasks else None,
        )
        result = train_adapter(spec, args.out)
        print(
            f"adapter saved to {result.out_dir} "
            f"(corpus loss {result.eval_loss_before:.4f} -> {result.eval_loss_after:.4f})"
        )
        return 0

    if args.command == "serve":
        from .serve import serve_adapter

        serve_adapter(args.adapter, host=args.host, port=args.port)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
