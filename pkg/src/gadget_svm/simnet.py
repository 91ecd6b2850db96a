"""Synchronous, round-driven network simulator.

Every round each node's step function runs once against the messages sent
to it in the previous round; messages produced in round ``r`` become visible
only after the barrier, in round ``r + 1``.  Links are lossless with zero
delay.  Inboxes are ordered by sender id, so floating-point accumulation at
the receiver does not depend on how step functions were scheduled.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import core
from .gossip import GossipReport, PushSumMixer, Topology, _rel_error, _stack, true_average


class SimulationFault(RuntimeError):
    pass


@dataclass(frozen=True)
class Message:
    src: int
    dst: int
    payload: tuple  # (vector share, weight share)
    round: int


StepFn = Callable[[int, list, int], Iterable[tuple]]


class RoundScheduler:
    """Round barrier, per-node inboxes and an optional message log.

    Parameters
    ----------
    topo : Topology
        Nodes may only address their neighbours or themselves.
    workers : int
        Thread-pool size used to run node step functions; results are
        independent of it.
    log : bool
        Keep every delivered message for :meth:`message_log`.
    """

    def __init__(self, topo: Topology, workers: int = 1, log: bool = True):
        self.topo = topo
        self.m = topo.m
        self.round = 0
        self.workers = workers
        self.logging = log
        self._allowed = [set(topo.neighbors(i)) | {i} for i in range(self.m)]
        self._inbox: list[list[Message]] = [[] for _ in range(self.m)]
        self._log: list[Message] = []
        self._pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def inbox(self, node: int) -> list[Message]:
        return list(self._inbox[node])

    def run_round(self, step: StepFn) -> "RoundScheduler":
        """Run ``step(node, inbox, round)`` for every node, then advance the barrier.

        ``step`` returns ``(dst, payload)`` pairs to send.
        """
        r = self.round
        inboxes = self._inbox

        def call(i):
            return list(step(i, inboxes[i], r))

        if self._pool is None:
            outputs = [call(i) for i in range(self.m)]
        else:
            outputs = list(self._pool.map(call, range(self.m)))

        new_inbox: list[list[Message]] = [[] for _ in range(self.m)]
        sent = 0
        for src, out in enumerate(outputs):
            for dst, payload in out:
                if dst not in self._allowed[src]:
                    raise SimulationFault(f"round {r}: node {src} addressed non-neighbour {dst}")
                msg = Message(src, int(dst), payload, r)
                new_inbox[msg.dst].append(msg)
                sent += 1
        delivered = sum(len(box) for box in new_inbox)
        if delivered != sent:
            raise SimulationFault(f"round {r}: sent {sent} but delivered {delivered}")
        if self.logging:
            for box in new_inbox:
                self._log.extend(box)
        self._inbox = new_inbox
        self.round = r + 1
        return self

    def message_log(self) -> list[Message]:
        """All delivered messages ordered by ``(round, src, dst)``."""
        if not self.logging:
            raise RuntimeError("message logging is disabled")
        return sorted(self._log, key=lambda msg: (msg.round, msg.src, msg.dst))

    def write_message_log(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["round", "src", "dst", "payload_norm", "weight"])
            for msg in self.message_log():
                vec, weight = msg.payload
                writer.writerow([msg.round, msg.src, msg.dst,
                                 repr(core.l2_norm(np.atleast_1d(vec))), repr(float(weight))])


def push_vector_simnet(values, B: np.ndarray, rounds: int, topo: Topology,
                       mode: str = "deterministic", weights=None, rngs=None,
                       workers: int = 1, log: bool = True):
    """Push-Vector executed as message passing on a :class:`RoundScheduler`.

    Same contract as :func:`gadget_svm.gossip.push_vector`; additionally
    returns the scheduler so its message log can be inspected.
    """
    V, scalar = _stack(values)
    m, d = V.shape
    W = np.ones(m) if weights is None else np.array(weights, dtype=np.float64)
    mixer = PushSumMixer(B, mode, rngs)
    truth = true_average(V, W)

    def collect(inbox):
        v = np.zeros(d)
        w = 0.0
        for msg in inbox:
            v += msg.payload[0]
            w += msg.payload[1]
        return v, w

    def step(i, inbox, r):
        v, w = (V[i], W[i]) if r == 0 else collect(inbox)
        return [(j, (sv, sw)) for j, sv, sw in mixer.outgoing(i, v, w)]

    sched = RoundScheduler(topo, workers=workers, log=log)
    try:
        for _ in range(rounds):
            sched.run_round(step)
    finally:
        sched.close()
    if rounds == 0:
        finalV, finalW = V.copy(), W.copy()
    else:
        pairs = [collect(sched.inbox(i)) for i in range(m)]
        finalV = np.stack([p[0] for p in pairs])
        finalW = np.array([p[1] for p in pairs])
    est = finalV / finalW[:, None]
    report = GossipReport(rounds, _rel_error(est, truth), truth)
    return (est[:, 0] if scalar else est), report, sched
