"""Experiment configuration and the runner behind the command line."""
from __future__ import annotations

import configparser
import dataclasses
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import core, dataio, evaluation, gadget, gossip, svm, simnet

# Regularization presets for the benchmark datasets.
LAMBDA_PRESETS = {
    "adult": 3.07e-5,
    "ccat": 1e-4,
    "mnist": 1.67e-5,
    "reuters": 1.29e-4,
    "usps": 1.36e-4,
    "webspam": 1e-5,
}

COMMANDS = ("gadget", "pegasos", "pushsum")
EXECUTION_ONLY = ("workers", "out")


@dataclass
class ExperimentConfig:
    command: str
    train: str | None = None
    test: str | None = None
    dim: int | None = None
    preset: str | None = None
    lam: float | None = None
    iters: int = 100_000
    epsilon: float = 1e-3
    patience: int = 1
    project_pre_gossip: bool = False
    project_post_gossip: bool = True
    loss_mode: str = "sample"
    nodes: int = 10
    topology: str = "complete"
    gamma: float = 1e-4
    gossip_mode: str = "deterministic"
    gossip_rounds: int | None = None
    rounds_k: float = 2.0
    engine: str = "composed"
    weight_by_shard_size: bool = True
    workers: int = 1
    seeds: list = field(default_factory=lambda: [0])
    trace_every: int | None = None
    include_load_time: bool = False
    values: list | None = None
    measured_rounds: bool = False
    message_log: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"command: expected one of {COMMANDS}, got {self.command!r}")
        if self.preset is not None:
            key = self.preset.lower()
            if key not in LAMBDA_PRESETS:
                raise ValueError(f"preset: unknown dataset {self.preset!r}")
            if self.lam is None:
                self.lam = LAMBDA_PRESETS[key]
        if self.command in ("gadget", "pegasos"):
            if self.train is None:
                raise ValueError("train: a training file is required")
            for key in ("train", "test"):
                value = getattr(self, key)
                if value is not None and not Path(value).is_file():
                    raise ValueError(f"{key}: file not found: {value}")
            if self.lam is None or not self.lam > 0:
                raise ValueError("lambda: must be given (or via preset) and > 0")
            if self.iters < 1:
                raise ValueError("iters: must be >= 1")
            if not self.epsilon > 0:
                raise ValueError("epsilon: must be > 0")
            if self.loss_mode not in svm.LOSS_MODES:
                raise ValueError(f"loss-mode: expected one of {svm.LOSS_MODES}")
        if self.command in ("gadget", "pushsum"):
            if self.gossip_mode not in gossip.MODES:
                raise ValueError(f"gossip-mode: expected one of {gossip.MODES}")
            if not 0 < self.gamma < 1:
                raise ValueError("gamma: must lie in (0, 1)")
            if self.gossip_rounds is not None and self.gossip_rounds < 0:
                raise ValueError("gossip-rounds: must be >= 0")
        if self.command == "gadget":
            if self.nodes < 1:
                raise ValueError("nodes: must be >= 1")
            if self.engine not in gadget.ENGINES:
                raise ValueError(f"engine: expected one of {gadget.ENGINES}")
        if self.command == "pushsum" and not self.values:
            raise ValueError("values: pushsum needs --values")
        if not self.seeds:
            raise ValueError("seed: at least one seed is required")

    def as_dict(self, execution: bool = False) -> dict:
        """Resolved settings as strings-or-numbers.

        ``workers`` and ``out`` only say where and how fast a run executes,
        so they are left out unless ``execution`` is set; that keeps output
        files identical across pool sizes and output directories.
        """
        out = {}
        for f in dataclasses.fields(self):
            if f.name in EXECUTION_ONLY and not execution:
                continue
            value = getattr(self, f.name)
            if isinstance(value, list):
                value = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
            out[f.name] = "" if value is None else value
        return out


# ---------------------------------------------------------------- parsing

def _to_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_seeds(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(s) for s in text]
    return [int(s) for s in str(text).split(",") if s.strip()]


def parse_values(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


# option name (as in config files and long flags) -> (field, converter)
OPTIONS = {
    "train": ("train", str),
    "test": ("test", str),
    "dim": ("dim", int),
    "preset": ("preset", str),
    "lambda": ("lam", float),
    "iters": ("iters", int),
    "epsilon": ("epsilon", float),
    "patience": ("patience", int),
    "project-pre-gossip": ("project_pre_gossip", _to_bool),
    "project-post-gossip": ("project_post_gossip", _to_bool),
    "loss-mode": ("loss_mode", str),
    "nodes": ("nodes", int),
    "topology": ("topology", str),
    "gamma": ("gamma", float),
    "gossip-mode": ("gossip_mode", str),
    "gossip-rounds": ("gossip_rounds", int),
    "rounds-k": ("rounds_k", float),
    "engine": ("engine", str),
    "weight-by-shard-size": ("weight_by_shard_size", _to_bool),
    "workers": ("workers", int),
    "seed": ("seeds", parse_seeds),
    "trials": ("trials", int),
    "trace-every": ("trace_every", int),
    "include-load-time": ("include_load_time", _to_bool),
    "values": ("values", parse_values),
    "measured-rounds": ("measured_rounds", _to_bool),
    "message-log": ("message_log", _to_bool),
    "out": ("out", str),
}


def read_config_file(path) -> dict[str, Any]:
    """Read ``key = value`` pairs from every section of an INI-style file."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ValueError(f"config: cannot read {path}")
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = key.replace("_", "-")
            if key not in OPTIONS:
                raise ValueError(f"config: unknown key {key!r} in [{section}]")
            values[key] = raw
    return values


def build_config(command: str, file_values: dict, cli_values: dict) -> ExperimentConfig:
    """Merge config-file values under command-line values (both keyed by option name)."""
    merged = {**file_values, **{k: v for k, v in cli_values.items() if v is not None}}
    kwargs: dict[str, Any] = {}
    trials = None
    for key, raw in merged.items():
        if key not in OPTIONS:
            raise ValueError(f"unknown option {key!r}")
        name, conv = OPTIONS[key]
        try:
            value = conv(raw)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{key}: {exc}") from None
        if name == "trials":
            trials = value
        else:
            kwargs[name] = value
    if trials is not None:
        base = kwargs.get("seeds", [0])
        if len(base) == 1:
            kwargs["seeds"] = [base[0] + k for k in range(trials)]
        elif len(base) != trials:
            raise ValueError("trials: disagrees with the number of seeds given")
    return ExperimentConfig(command=command, **kwargs)


# ---------------------------------------------------------------- running

def _hyper(cfg: ExperimentConfig, seed: int) -> svm.HyperParams:
    return svm.HyperParams(cfg.lam, cfg.iters, cfg.epsilon, cfg.project_pre_gossip,
                           cfg.project_post_gossip, seed, cfg.loss_mode, cfg.patience)


def _load(cfg: ExperimentConfig):
    start = time.perf_counter()
    train = dataio.load_dataset(cfg.train, dim=cfg.dim)
    test = dataio.load_dataset(cfg.test, dim=cfg.dim) if cfg.test else None
    if test is not None and test.dim != train.dim:
        dim = max(train.dim, test.dim)
        train, test = train.with_dim(dim), test.with_dim(dim)
    return train, test, time.perf_counter() - start


def _csv_list(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def run_experiment(cfg: ExperimentConfig, echo=print) -> dict:
    """Run one configured experiment, writing outputs under ``cfg.out`` if set.

    Returns a dict with the per-seed results and the aggregate summary.
    Timing goes to ``timing.txt`` only, so every other output file is
    byte-identical across reruns of the same config.
    """
    out = Path(cfg.out) if cfg.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    if cfg.command == "pushsum":
        return _run_pushsum(cfg, out, echo)
    return _run_training(cfg, out, echo)


def _run_pushsum(cfg, out, echo):
    values = cfg.values
    topo = gossip.parse_topology(cfg.topology, len(values))
    B = gossip.build_metropolis_matrix(topo)
    if cfg.gossip_rounds is not None:
        rounds = cfg.gossip_rounds
    elif cfg.measured_rounds:
        rounds = gossip.measured_rounds_for_accuracy(topo, cfg.gamma, B, probe=values)
    else:
        rounds = gossip.rounds_for_accuracy(topo, cfg.gamma, cfg.rounds_k)
    rngs = [core.rng_stream(cfg.seeds[0], i, gadget.GOSSIP_STREAM) for i in range(topo.m)]
    est, report, sched = simnet.push_vector_simnet(values, B, rounds, topo, cfg.gossip_mode,
                                                   rngs=rngs, log=cfg.message_log)
    summary = {f"config.{k}": v for k, v in cfg.as_dict().items()}
    summary.update({"rounds": rounds, "true_average": repr(float(report.true_average[0])),
                    "estimates": _csv_list(est), "max_rel_error": report.max_rel_error})
    echo(f"rounds = {rounds}")
    for i, e in enumerate(est):
        echo(f"node {i}: {float(e)!r}")
    echo(f"max relative error = {report.max_rel_error:.3e}")
    if out is not None:
        evaluation.write_summary(out / "pushsum.txt", summary)
        if cfg.message_log:
            sched.write_message_log(out / "messages.csv")
    return {"estimates": est, "rounds": rounds, "report": report, "summary": summary}


def _run_training(cfg, out, echo):
    train, test, load_time = _load(cfg)
    eval_set = test if test is not None else train
    config_echo = cfg.as_dict()
    per_seed = []
    accuracy_table = []
    timing = {"load_time": load_time, "load_time_included": cfg.include_load_time}
    for seed in cfg.seeds:
        hp = _hyper(cfg, seed)
        if cfg.command == "pegasos":
            start = time.perf_counter()
            model, trace = svm.pegasos_train(train, hp, test, cfg.trace_every)
            wall = time.perf_counter() - start
            accs = [1.0 - svm.zero_one_error(model, eval_set)]
            # one learner, so the largest and mean weight change coincide
            stop, max_delta, mean_delta = model.iterations, trace[-1].max_delta, trace[-1].max_delta
            extra = {"final_objective": svm.primal_objective(model.w, train, hp.lam)}
        else:
            topo = gossip.parse_topology(cfg.topology, cfg.nodes)
            shards = dataio.partition(train, cfg.nodes, seed)
            test_shards = dataio.partition(eval_set, cfg.nodes, seed)
            rounds = cfg.gossip_rounds
            if rounds is None:
                rounds = gossip.rounds_for_accuracy(topo, cfg.gamma, cfg.rounds_k)
            gcfg = gadget.GadgetConfig(hp, topo, gossip_rounds=rounds,
                                       gossip_mode=cfg.gossip_mode, gamma=cfg.gamma,
                                       weight_by_shard_size=cfg.weight_by_shard_size,
                                       engine=cfg.engine, workers=cfg.workers)
            res = gadget.gadget_train(shards, gcfg, test_shards, cfg.trace_every)
            trace = res.trace
            accs = [1.0 - svm.zero_one_error(m, ts.dataset)
                    for m, ts in zip(res.models, test_shards)]
            stop, max_delta, mean_delta = res.stop_iteration, res.max_delta, res.mean_delta
            R = evaluation.data_radius(train)
            c = evaluation.subgradient_bound(hp.lam, R)
            gamma = min(res.gossip_error, 1.0 - 1e-12)
            extra = {
                "gossip_rounds": gcfg.gossip_rounds,
                "gossip_error": res.gossip_error,
                "mean_objective": trace[-1].mean_objective,
                "data_radius": R,
                "subgradient_bound": c,
                "regret_bound": evaluation.regret_bound(
                    evaluation.BoundInputs(hp.lam, stop, c, R, gamma)),
            }
            wall = res.wall_time
        accuracy_table.append(accs)
        row = {
            "seed": seed,
            "stop_iteration": stop,
            "accuracy_mean": float(np.mean(accs)),
            "accuracy_std": evaluation.combined_std([accs]),
            "node_accuracy": _csv_list(accs),
            "epsilon_at_stop_max": max_delta,
            "epsilon_at_stop_mean": mean_delta,
            **extra,
        }
        per_seed.append(row)
        timing[f"seed{seed}_train_time"] = wall + (load_time if cfg.include_load_time else 0.0)
        echo(f"seed {seed}: accuracy {row['accuracy_mean']:.4f} "
             f"(stopped at t={stop}, max delta {max_delta:.3g})")
        if out is not None:
            evaluation.write_trace_csv(trace, out / f"trace_seed{seed}.csv", config_echo)
            evaluation.write_summary(out / f"summary_seed{seed}.txt",
                                     {**{f"config.{k}": v for k, v in config_echo.items()}, **row})
        per_seed[-1]["trace"] = trace
    summary = {
        **{f"config.{k}": v for k, v in config_echo.items()},
        "trials": len(cfg.seeds),
        "accuracy_mean": float(np.mean(accuracy_table)),
        "accuracy_std": evaluation.combined_std(accuracy_table),
    }
    echo(f"mean accuracy {summary['accuracy_mean']:.4f} +/- {summary['accuracy_std']:.4f} "
         f"over {len(cfg.seeds)} trial(s)")
    if out is not None:
        evaluation.write_summary(out / "summary.txt", summary)
        evaluation.write_summary(out / "timing.txt",
                                 {**{f"config.{k}": v for k, v in config_echo.items()}, **timing})
    return {"per_seed": per_seed, "summary": summary, "timing": timing}
