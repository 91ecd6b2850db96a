"""Command-line front end: ``gadget-svm {gadget,pegasos,pushsum} [options]``."""
from __future__ import annotations

import argparse
import sys

from . import experiment
from .experiment import LAMBDA_PRESETS, OPTIONS

BOOL_FLAGS = ("project-pre-gossip", "project-post-gossip", "weight-by-shard-size",
              "include-load-time", "measured-rounds", "message-log")

HELP = {
    "config": "INI-style file of key = value settings (any section); flags override it",
    "train": "training set in LIBSVM format",
    "test": "test set in LIBSVM format (accuracy falls back to the training set)",
    "dim": "feature dimension (must cover every index in the files)",
    "preset": f"take lambda from a named dataset preset: {', '.join(LAMBDA_PRESETS)}",
    "lambda": "regularization strength",
    "iters": "iteration cap T (default 100000)",
    "epsilon": "stop once every weight change is below this (default 0.001)",
    "patience": "consecutive below-epsilon iterations required to stop (default 1)",
    "loss-mode": "sample (one instance per step) or violating-set-mean",
    "nodes": "number of network nodes m (default 10)",
    "topology": "ring, path, complete, star, random-k-regular:K[:SEED], "
                "erdos-renyi:P[:SEED] or file:PATH (default complete)",
    "gamma": "target relative gossip error used to size the round budget (default 1e-4)",
    "gossip-mode": "deterministic or randomized (default deterministic)",
    "gossip-rounds": "fixed gossip rounds per iteration (overrides gamma)",
    "rounds-k": "constant K in ceil(K m ln(1/gamma)) (default 2)",
    "engine": "gossip execution: composed, vector or simnet (default composed)",
    "workers": "thread-pool size for node-local work; results do not depend on it",
    "seed": "seed or comma-separated seeds, one trial each (default 0)",
    "trials": "number of trials; with a single seed S uses seeds S..S+trials-1",
    "trace-every": "record a trace row every this many iterations",
    "values": "comma-separated per-node values for the pushsum demo",
    "out": "output directory for traces and summaries",
}


def _add(parser, name):
    dest = name.replace("-", "_")
    if name in BOOL_FLAGS:
        parser.add_argument(f"--{name}", dest=dest, action=argparse.BooleanOptionalAction,
                            default=None, help=HELP.get(name))
    else:
        parser.add_argument(f"--{name}", dest=dest, default=None, metavar=name.upper(),
                            help=HELP.get(name))


COMMAND_OPTIONS = {
    "pegasos": ["train", "test", "dim", "preset", "lambda", "iters", "epsilon", "patience",
                "project-pre-gossip", "project-post-gossip", "loss-mode", "seed", "trials",
                "trace-every", "include-load-time", "out"],
    "gadget": ["train", "test", "dim", "preset", "lambda", "iters", "epsilon", "patience",
               "project-pre-gossip", "project-post-gossip", "loss-mode", "nodes", "topology",
               "gamma", "gossip-mode", "gossip-rounds", "rounds-k", "engine",
               "weight-by-shard-size", "workers", "seed", "trials", "trace-every",
               "include-load-time", "out"],
    "pushsum": ["topology", "values", "gamma", "gossip-mode", "gossip-rounds", "rounds-k",
                "measured-rounds", "message-log", "seed", "out"],
}

DESCRIPTIONS = {
    "gadget": "train with GADGET on a simulated network",
    "pegasos": "train the centralized Pegasos baseline",
    "pushsum": "average per-node values with Push-Sum and print the estimates",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gadget-svm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for command, names in COMMAND_OPTIONS.items():
        p = sub.add_parser(command, help=DESCRIPTIONS[command],
                           description=DESCRIPTIONS[command])
        p.add_argument("--config", default=None, help=HELP["config"])
        for name in names:
            assert name in OPTIONS, name
            _add(p, name)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cli_values = {name: getattr(args, name.replace("-", "_"))
                  for name in COMMAND_OPTIONS[args.command]}
    try:
        file_values = experiment.read_config_file(args.config) if args.config else {}
        cfg = experiment.build_config(args.command, file_values, cli_values)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        experiment.run_experiment(cfg)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"gadget-svm {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0
