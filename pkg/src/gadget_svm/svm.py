"""Hinge loss, primal objective, the Pegasos step, and the centralized trainer."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import core
from .core import l2_norm, scale_add
from .dataio import Dataset, LabeledInstance

LOSS_MODES = ("sample", "violating-set-mean")


@dataclass(frozen=True)
class HyperParams:
    """Training hyper-parameters.

    ``lam`` is the regularization weight (step size is ``1/(lam*t)``); the two
    projection flags select projection onto the ``1/sqrt(lam)`` ball before
    and/or after the gossip exchange.  Training stops after ``T`` iterations or
    once the weight change stays below ``epsilon`` for ``patience`` checks.
    """

    lam: float
    T: int
    epsilon: float = 1e-3
    project_pre_gossip: bool = False
    project_post_gossip: bool = True
    seed: int = 0
    loss_mode: str = "sample"
    patience: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")

    @property
    def radius(self) -> float:
        return 1.0 / math.sqrt(self.lam)


@dataclass
class Model:
    w: np.ndarray
    hp: HyperParams
    iterations: int
    # (1/T) * sum of the iterates w^(1..T), w^(1) = 0
    w_avg: np.ndarray | None = None

    def decision(self, ds: Dataset) -> np.ndarray:
        return ds.matrix @ self.w


@dataclass
class TraceRow:
    t: int
    mean_objective: float
    mean_test_error: float
    max_delta: float
    columns: dict = field(default_factory=dict)


def _weights(model) -> np.ndarray:
    return model.w if isinstance(model, Model) else model


def margins(w: np.ndarray, ds: Dataset) -> np.ndarray:
    if ds.dim > w.shape[0]:
        raise core.DimensionError(f"dataset dim {ds.dim} exceeds weight length {w.shape[0]}")
    if ds.dim < w.shape[0]:
        w = w[: ds.dim]
    return ds.labels * (ds.matrix @ w)


def hinge_loss(w: np.ndarray, inst: LabeledInstance) -> float:
    return max(0.0, 1.0 - inst.y * core.dot(inst.x, w))


def mean_hinge_loss(w: np.ndarray, ds: Dataset) -> float:
    if len(ds) == 0:
        raise ValueError("empty dataset")
    return float(np.mean(np.maximum(0.0, 1.0 - margins(w, ds))))


def primal_objective(w: np.ndarray, ds: Dataset, lam: float) -> float:
    """``(lam/2)*||w||^2`` plus the mean hinge loss over ``ds``."""
    return 0.5 * lam * core.seq_sum(w * w) + mean_hinge_loss(w, ds)


def zero_one_error(model, ds: Dataset) -> float:
    """Misclassification rate; a zero score is predicted as +1."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    w = _weights(model)
    if ds.dim < w.shape[0]:
        w = w[: ds.dim]
    pred = np.where(ds.matrix @ w >= 0.0, 1.0, -1.0)
    return float(np.mean(pred != ds.labels))


def subgradient_step(w: np.ndarray, inst: LabeledInstance, lam: float, t: int) -> np.ndarray:
    """One Pegasos step on a single instance with step size ``1/(lam*t)``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    shrink = 1.0 - 1.0 / t
    if inst.y * core.dot(inst.x, w) < 1.0:
        return scale_add(shrink, w, inst.y * (1.0 / (lam * t)), inst.x)
    core._check_fits(inst.x, w)
    return shrink * w


def violating_set_step(w: np.ndarray, ds: Dataset, lam: float, t: int) -> np.ndarray:
    """Full-batch variant: the loss term is ``(1/n) * sum(y*x)`` over margin violators."""
    viol = margins(w, ds) < 1.0
    direction = np.zeros_like(w)
    if np.any(viol):
        direction[: ds.dim] = ds.matrix[viol].T @ ds.labels[viol]
    return (1.0 - 1.0 / t) * w + (1.0 / (lam * t) / len(ds)) * direction


def project_to_ball(w: np.ndarray, lam: float) -> np.ndarray:
    """Scale ``w`` into the ball of radius ``1/sqrt(lam)``.

    The result never exceeds the radius (the scale factor is nudged down if
    rounding overshoots), which makes the projection exactly idempotent.
    ``w`` is returned as-is when already inside.
    """
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    radius = 1.0 / math.sqrt(lam)
    norm = l2_norm(w)
    if norm <= radius:
        return w
    scale = radius / norm
    out = scale * w
    while l2_norm(out) > radius:
        scale = np.nextafter(scale, 0.0)
        out = scale * w
    return out


class InstanceSampler:
    """Uniform index draws from a generator, fetched in fixed-size blocks."""

    def __init__(self, rng: np.random.Generator, n: int, block: int = 4096):
        self.rng = rng
        self.n = n
        self.block = block
        self._buf = np.empty(0, dtype=np.int64)
        self._pos = 0

    def __call__(self) -> int:
        if self._pos >= self._buf.shape[0]:
            self._buf = self.rng.integers(0, self.n, size=self.block)
            self._pos = 0
        k = int(self._buf[self._pos])
        self._pos += 1
        return k


def local_step(w: np.ndarray, ds: Dataset, sampler: InstanceSampler, hp: HyperParams,
               t: int) -> np.ndarray:
    """Sample (if needed) and take one subgradient step, then the pre-gossip projection."""
    if hp.loss_mode == "sample":
        w_new = subgradient_step(w, ds.instances[sampler()], hp.lam, t)
    else:
        w_new = violating_set_step(w, ds, hp.lam, t)
    if hp.project_pre_gossip:
        w_new = project_to_ball(w_new, hp.lam)
    return w_new


def default_trace_every(T: int) -> int:
    return max(1, T // 200)


def pegasos_train(ds: Dataset, hp: HyperParams, test: Dataset | None = None,
                  trace_every: int | None = None,
                  callback: Callable[[int, np.ndarray], None] | None = None):
    """Centralized Pegasos on the whole dataset.

    Runs the same local step as a GADGET node, with no gossip in between, so
    both projections (when enabled) are applied back to back.  Stops at ``T``
    or when the weight change stays below ``epsilon`` for ``patience``
    consecutive iterations.

    Returns
    -------
    (Model, list[TraceRow])
        Trace rows carry the training objective, the test error (``nan``
        without a test set) and the training error as an extra column.
    """
    if len(ds) == 0:
        raise ValueError("empty dataset")
    every = trace_every or default_trace_every(hp.T)
    sampler = InstanceSampler(core.rng_stream(hp.seed, 0), len(ds))
    w = core.zeros(ds.dim)
    w_sum = core.zeros(ds.dim)
    trace = []
    streak = 0
    t = 0
    for t in range(1, hp.T + 1):
        w_sum += w
        w_new = local_step(w, ds, sampler, hp, t)
        if hp.project_post_gossip:
            w_new = project_to_ball(w_new, hp.lam)
        delta = l2_norm(w_new - w)
        w = w_new
        if callback is not None:
            callback(t, w)
        streak = streak + 1 if delta < hp.epsilon else 0
        done = streak >= hp.patience or t == hp.T
        if t % every == 0 or done:
            trace.append(TraceRow(
                t, primal_objective(w, ds, hp.lam),
                zero_one_error(w, test) if test is not None else math.nan,
                delta, {"train_error": zero_one_error(w, ds)}))
        if done:
            break
    return Model(w, hp, t, w_sum / t), trace
