"""Trainer command line: toy corpora, training runs, and export tooling."""

from __future__ import annotations

import argparse
import json
import sys

import torch

from . import data
from .export import export_archive, export_parity_vectors, save_parity_vectors
from .model import FULL_CONFIG, TINY_CONFIG, FrnNet
from .train import TOY_CONFIG, TrainConfig, run_training


def cmd_make_corpus(args) -> int:
    files = data.synth_toy_corpus(args.out, n_files=args.files,
                                  seconds=args.seconds, seed=args.seed)
    print(json.dumps({"out": str(args.out), "files": len(files)}))
    return 0


def cmd_train(args) -> int:
    cfg = TOY_CONFIG if args.preset == "toy" else TrainConfig()
    summary = run_training(args.corpus, args.out, cfg, seed=args.seed)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_export_random(args) -> int:
    torch.manual_seed(args.seed)
    net = FrnNet(TINY_CONFIG if args.preset == "tiny" else FULL_CONFIG)
    export_archive(net, args.out, extra_metadata={"seed": args.seed})
    if args.vectors:
        save_parity_vectors(export_parity_vectors(net, seed=args.seed), args.vectors)
    print(json.dumps({"out": str(args.out), "vectors": args.vectors,
                      "n_parameters": net.n_parameters()}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frn-train",
                                     description="Concealment-network training tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-corpus", help="synthesize a toy 48 kHz corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--files", type=int, default=12)
    p.add_argument("--seconds", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_corpus)

    p = sub.add_parser("train", help="pretrain + joint training; exports an archive")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--preset", choices=("toy", "full"), default="toy")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("export-random",
                       help="random-init archive plus optional parity vectors")
    p.add_argument("--out", required=True)
    p.add_argument("--vectors", help="parity-vector JSON path")
    p.add_argument("--preset", choices=("full", "tiny"), default="full")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_export_random)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
