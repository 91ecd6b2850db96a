"""GADGET: local Pegasos steps fused by a network-wide Push-Vector exchange.

Every iteration ``t`` runs in three synchronous phases:

1. each node samples a local instance and takes a subgradient step
   (optionally projecting onto the ``1/sqrt(lam)`` ball);
2. one Push-Vector call averages the intermediate weight vectors over the
   network for ``gossip_rounds`` rounds;
3. each node adopts its gossip estimate (optionally projected) and records
   how far its weights moved.

Node-local phases may run on a thread pool; all exchange goes through the
gossip engine, so the outcome does not depend on the pool size.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import core, gossip, simnet
from .core import l2_norm
from .dataio import Shard
from .svm import (HyperParams, InstanceSampler, Model, TraceRow, default_trace_every,
                  local_step, primal_objective, project_to_ball, zero_one_error)

ENGINES = ("composed", "vector", "simnet")
SAMPLING_STREAM = 0
GOSSIP_STREAM = 1


@dataclass
class NodeState:
    node_id: int
    shard: Shard
    w_hat: np.ndarray
    w_tilde: np.ndarray
    sampler: InstanceSampler
    gossip_rng: np.random.Generator
    share: float = 1.0
    last_delta: float = math.nan
    w_sum: np.ndarray | None = None


@dataclass
class GadgetConfig:
    """Network and protocol settings for one GADGET run.

    ``B`` defaults to the Metropolis matrix of ``topo``; ``gossip_rounds``
    defaults to ``rounds_for_accuracy(topo, gamma)``.  With
    ``weight_by_shard_size`` node ``i`` enters Push-Sum with weight
    ``n_i / N`` so the consensus value is the shard-size weighted average.

    ``engine`` picks how the exchange executes: ``composed`` applies the
    precomputed multi-round operator (deterministic mode only; randomized
    mode falls back to ``vector``), ``vector`` runs round by round on
    arrays, ``simnet`` passes messages through the round scheduler.
    """

    hp: HyperParams
    topo: gossip.Topology
    B: np.ndarray | None = None
    gossip_rounds: int | None = None
    gossip_mode: str = "deterministic"
    gamma: float = 1e-4
    weight_by_shard_size: bool = True
    engine: str = "composed"
    workers: int = 1

    def __post_init__(self):
        if self.B is None:
            self.B = gossip.build_metropolis_matrix(self.topo)
        else:
            self.B = np.asarray(self.B, dtype=np.float64)
            gossip.check_mixing_matrix(self.B, self.topo)
        if self.gossip_rounds is None:
            self.gossip_rounds = gossip.rounds_for_accuracy(self.topo, self.gamma)
        if self.gossip_rounds < 1:
            raise ValueError("gossip_rounds must be >= 1")
        if self.gossip_mode not in gossip.MODES:
            raise ValueError(f"gossip_mode must be one of {gossip.MODES}")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class GadgetResult:
    models: list
    average_model: Model
    trace: list
    stop_iteration: int
    max_delta: float
    mean_delta: float
    gossip_error: float  # largest measured relative Push-Sum error over the run
    wall_time: float
    states: list = field(repr=False, default_factory=list)


def init_states(shards: Sequence[Shard], cfg: GadgetConfig) -> list[NodeState]:
    total = sum(s.n for s in shards)
    dim = max(s.dim for s in shards)
    states = []
    for s in shards:
        share = s.n / total if cfg.weight_by_shard_size else 1.0
        states.append(NodeState(
            s.node_id, s, core.zeros(dim), core.zeros(dim),
            InstanceSampler(core.rng_stream(cfg.hp.seed, s.node_id, SAMPLING_STREAM), s.n),
            core.rng_stream(cfg.hp.seed, s.node_id, GOSSIP_STREAM),
            share, math.nan, core.zeros(dim)))
    return states


def _map(pool, fn, items):
    if pool is None:
        return [fn(x) for x in items]
    return list(pool.map(fn, items))


def make_mixer(states: Sequence[NodeState], cfg: GadgetConfig) -> gossip.PushSumMixer:
    return gossip.PushSumMixer(cfg.B, cfg.gossip_mode, [s.gossip_rng for s in states])


def gadget_iteration(states: list[NodeState], cfg: GadgetConfig, t: int,
                     pool: ThreadPoolExecutor | None = None,
                     mixer: gossip.PushSumMixer | None = None) -> gossip.GossipReport:
    """Advance every node by one GADGET iteration (in place).

    Returns the Push-Vector report of the exchange.  Pass the same ``mixer``
    across iterations to reuse its precomputed operator.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if len(states) != cfg.topo.m:
        raise ValueError(f"{len(states)} node states for a {cfg.topo.m}-node topology")
    hp = cfg.hp

    def local(s: NodeState):
        s.w_sum += s.w_hat
        s.w_tilde = local_step(s.w_hat, s.shard.dataset, s.sampler, hp, t)

    _map(pool, local, states)

    values = [s.share * s.w_tilde for s in states]
    weights = [s.share for s in states]
    rngs = [s.gossip_rng for s in states]
    if cfg.engine in ("composed", "vector"):
        est, report = gossip.push_vector(values, cfg.B, cfg.gossip_rounds, cfg.gossip_mode,
                                         weights=weights, rngs=rngs,
                                         mixer=mixer or make_mixer(states, cfg),
                                         compose=cfg.engine == "composed")
    else:
        est, report, _ = simnet.push_vector_simnet(values, cfg.B, cfg.gossip_rounds, cfg.topo,
                                                   cfg.gossip_mode, weights=weights, rngs=rngs,
                                                   workers=cfg.workers, log=False)

    def adopt(pair):
        s, w_new = pair
        if hp.project_post_gossip:
            w_new = project_to_ball(w_new, hp.lam)
        s.last_delta = l2_norm(w_new - s.w_hat)
        s.w_hat = w_new

    _map(pool, adopt, list(zip(states, est)))
    return report


def check_convergence(states: Sequence[NodeState], epsilon: float) -> bool:
    """True iff every node's last weight change is strictly below ``epsilon``."""
    deltas = [s.last_delta for s in states]
    if any(math.isnan(d) for d in deltas):
        raise RuntimeError("convergence checked before the first iteration")
    return max(deltas) < epsilon


def max_pairwise_distance(weights: Sequence[np.ndarray]) -> float:
    best = 0.0
    for i in range(len(weights)):
        for j in range(i + 1, len(weights)):
            best = max(best, l2_norm(weights[i] - weights[j]))
    return best


def network_average(states: Sequence[NodeState]) -> np.ndarray:
    total = core.seq_sum(np.array([s.share for s in states]))
    acc = core.zeros(states[0].w_hat.shape[0])
    for s in states:
        acc += s.share * s.w_hat
    return acc / total


def _trace_row(states, t, lam, test_shards) -> TraceRow:
    objectives = [primal_objective(s.w_hat, s.shard.dataset, lam) for s in states]
    if test_shards is not None:
        test_err = float(np.mean([zero_one_error(s.w_hat, ts.dataset)
                                  for s, ts in zip(states, test_shards)]))
    else:
        test_err = math.nan
    cols = {f"node{s.node_id}_objective": obj for s, obj in zip(states, objectives)}
    return TraceRow(t, float(np.mean(objectives)), test_err,
                    max(s.last_delta for s in states), cols)


def gadget_train(shards: Sequence[Shard], cfg: GadgetConfig,
                 test_shards: Sequence[Shard] | None = None,
                 trace_every: int | None = None,
                 callback: Callable[[int, list], None] | None = None) -> GadgetResult:
    """Run GADGET until ``T`` iterations or until weights stop moving.

    Stops early once :func:`check_convergence` holds for ``hp.patience``
    consecutive iterations.  ``callback(t, states)`` is invoked after every
    iteration.  Wall time covers training only, not data loading.
    """
    if len(shards) != cfg.topo.m:
        raise ValueError(f"{len(shards)} shards for a {cfg.topo.m}-node topology")
    if test_shards is not None and len(test_shards) != len(shards):
        raise ValueError("need one test shard per node")
    hp = cfg.hp
    every = trace_every or default_trace_every(hp.T)
    states = init_states(shards, cfg)
    mixer = make_mixer(states, cfg)
    pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    trace = []
    streak = 0
    gossip_error = 0.0
    t = 0
    start = time.perf_counter()
    try:
        for t in range(1, hp.T + 1):
            report = gadget_iteration(states, cfg, t, pool, mixer)
            gossip_error = max(gossip_error, report.max_rel_error)
            if callback is not None:
                callback(t, states)
            streak = streak + 1 if check_convergence(states, hp.epsilon) else 0
            done = streak >= hp.patience or t == hp.T
            if t % every == 0 or done:
                trace.append(_trace_row(states, t, hp.lam, test_shards))
            if done:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    wall = time.perf_counter() - start
    models = [Model(s.w_hat, hp, t, s.w_sum / t) for s in states]
    deltas = [s.last_delta for s in states]
    return GadgetResult(models, Model(network_average(states), hp, t), trace, t,
                        max(deltas), float(np.mean(deltas)), gossip_error, wall, states)
