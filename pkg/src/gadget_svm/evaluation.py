"""Metrics, the regret-bound certificate, speed-up, and report writers."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import core
from .dataio import Dataset
from .svm import TraceRow, mean_hinge_loss


def data_radius(ds: Dataset) -> float:
    """Largest instance norm ``max_i ||x_i||``."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    sq = ds.matrix.multiply(ds.matrix).sum(axis=1)
    return float(np.sqrt(np.max(sq)))


@dataclass(frozen=True)
class BoundInputs:
    lam: float
    T: int
    c: float      # bound on subgradient norms
    R: float      # data radius
    gamma: float  # gossip relative error

    def __post_init__(self):
        if not (self.lam > 0 and self.T >= 1 and self.c > 0 and self.R > 0):
            raise ValueError("lam, T, c and R must be positive")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")


def subgradient_bound(lam: float, R: float) -> float:
    """``c = lam * (1/sqrt(lam)) + R``: regularizer term on the ball boundary plus data term."""
    return math.sqrt(lam) + R


def regret_bound(b: BoundInputs) -> float:
    """Upper bound on ``f(w_avg) - f(w*)`` for a node's averaged iterate.

    ``2c/sqrt(lam) + c^2 ln(T) / (2 T lam) + (2/sqrt(lam)) (gamma R/sqrt(lam) + gamma R)``
    """
    root = math.sqrt(b.lam)
    return (2.0 * b.c / root
            + b.c ** 2 * math.log(b.T) / (2.0 * b.T * b.lam)
            + (2.0 / root) * (b.gamma * b.R / root + b.gamma * b.R))


def speedup(t_distributed: float, t_centralized: float) -> float:
    """Distributed time over centralized time (values below 1 favour GADGET)."""
    if t_distributed <= 0 or t_centralized <= 0:
        raise ValueError("times must be positive")
    return t_distributed / t_centralized


def lipschitz_violations(ds: Dataset, pairs: int, rng: np.random.Generator,
                         scale: float = 1.0, slack: float = 1e-12) -> int:
    """Count random weight pairs breaking ``|dL| <= R ||dw||`` for the mean hinge loss.

    ``slack`` absorbs rounding in the two loss evaluations.
    """
    R = data_radius(ds)
    bad = 0
    for _ in range(pairs):
        w1 = rng.normal(scale=scale, size=ds.dim)
        w2 = rng.normal(scale=scale, size=ds.dim)
        lhs = abs(mean_hinge_loss(w1, ds) - mean_hinge_loss(w2, ds))
        rhs = R * core.l2_norm(w1 - w2)
        if lhs > rhs * (1.0 + slack) + slack:
            bad += 1
    return bad


def combined_std(accuracy: Sequence[Sequence[float]]) -> float:
    """``sqrt(Var(Nodes) + Var(Trials))`` for a trials x nodes accuracy table.

    ``Var(Nodes)`` is the across-node variance averaged over trials and
    ``Var(Trials)`` the variance of the per-trial node means (both ddof=0).
    """
    acc = np.asarray(accuracy, dtype=np.float64)
    if acc.ndim != 2 or acc.size == 0:
        raise ValueError("expected a non-empty trials x nodes table")
    var_nodes = float(np.mean(np.var(acc, axis=1)))
    var_trials = float(np.var(np.mean(acc, axis=1)))
    return math.sqrt(var_nodes + var_trials)


@dataclass
class RunReport:
    node_accuracy: list           # per trial, per node
    trace: list
    wall_time: float
    stop_iteration: int
    max_delta: float
    mean_delta: float
    extra: dict = field(default_factory=dict)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.node_accuracy))

    @property
    def std_accuracy(self) -> float:
        return combined_std(self.node_accuracy)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def trace_csv_text(trace: Sequence[TraceRow], config: Mapping | None = None) -> str:
    if not trace:
        raise ValueError("empty trace")
    extra = list(trace[0].columns)
    buf = io.StringIO()
    if config:
        for key, value in config.items():
            buf.write(f"# {key} = {_fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "mean_objective", "mean_test_error", "max_delta", *extra])
    for row in trace:
        writer.writerow([row.t, _fmt(row.mean_objective), _fmt(row.mean_test_error),
                         _fmt(row.max_delta), *(_fmt(row.columns[k]) for k in extra)])
    return buf.getvalue()


def write_trace_csv(trace: Sequence[TraceRow], path, config: Mapping | None = None) -> Path:
    """Write the trace as CSV; ``config`` is echoed as leading ``# key = value`` lines."""
    text = trace_csv_text(trace, config)
    path = Path(path)
    path.write_text(text, encoding="ascii")
    return path


def write_summary(path, items: Mapping) -> Path:
    """Plain-text ``key = value`` summary, one per line, in insertion order."""
    path = Path(path)
    path.write_text("".join(f"{k} = {_fmt(v)}\n" for k, v in items.items()), encoding="ascii")
    return path


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            key, _, value = line.partition(" = ")
            out[key.strip()] = value.strip()
    return out
