"""Topologies, doubly stochastic mixing matrices, and Push-Sum / Push-Vector.

Node ``i`` holds a (sum-vector, protocol weight) pair.  Each round it splits
that pair into shares, one per chosen recipient, and its new pair is the sum
of the shares it received.  The ratio ``v / w`` is its estimate of the
network average.

Two share rules are supported:

``deterministic``
    node ``i`` sends ``B[i, j]`` of its pair to every ``j`` with ``B[i, j] > 0``
    (itself included), i.e. ``V <- B^T V``.
``randomized``
    node ``i`` keeps half and pushes half to one neighbour picked uniformly
    by its own generator.

Contributions are accumulated per destination in increasing source order, the
same canonical order the round scheduler in :mod:`gadget_svm.simnet` uses, so
both execution paths agree bit for bit.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import networkx as nx
import numpy as np

from . import core

MODES = ("deterministic", "randomized")


@dataclass(frozen=True)
class Topology:
    """Undirected simple graph on nodes ``0..m-1``."""

    m: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("topology needs at least one node")
        norm = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise ValueError(f"edge ({i}, {j}) outside 0..{self.m - 1}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, m: int, edges) -> "Topology":
        edges = list(edges)
        seen = set()
        for i, j in edges:
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        return cls(m, frozenset(edges))

    def neighbors(self, i: int) -> list[int]:
        return self._adjacency[i]

    def degree(self, i: int) -> int:
        return len(self._adjacency[i])

    @property
    def _adjacency(self) -> list[list[int]]:
        adj = self.__dict__.get("_adj")
        if adj is None:
            adj = [[] for _ in range(self.m)]
            for i, j in sorted(self.edges):
                adj[i].append(j)
                adj[j].append(i)
            adj = [sorted(a) for a in adj]
            object.__setattr__(self, "_adj", adj)
        return adj

    def is_connected(self) -> bool:
        seen = {0}
        queue = deque([0])
        while queue:
            for j in self.neighbors(queue.popleft()):
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
        return len(seen) == self.m

    def relabel(self, perm: Sequence[int]) -> "Topology":
        """Topology with node ``i`` renamed to ``perm[i]``."""
        return Topology(self.m, frozenset((perm[i], perm[j]) for i, j in self.edges))


def ring(m: int) -> Topology:
    if m <= 2:
        return Topology(m, frozenset({(0, 1)} if m == 2 else set()))
    return Topology(m, frozenset((i, (i + 1) % m) for i in range(m)))


def path(m: int) -> Topology:
    return Topology(m, frozenset((i, i + 1) for i in range(m - 1)))


def complete(m: int) -> Topology:
    return Topology(m, frozenset((i, j) for i in range(m) for j in range(i + 1, m)))


def star(leaves: int) -> Topology:
    """Hub 0 joined to nodes ``1..leaves``."""
    return Topology(leaves + 1, frozenset((0, j) for j in range(1, leaves + 1)))


def _from_nx(g: nx.Graph) -> Topology:
    return Topology(g.number_of_nodes(), frozenset(g.edges()))


def random_regular(m: int, k: int, seed: int, max_tries: int = 1000) -> Topology:
    for attempt in range(max_tries):
        topo = _from_nx(nx.random_regular_graph(k, m, seed=seed + attempt))
        if topo.is_connected():
            return topo
    raise ValueError(f"no connected {k}-regular graph on {m} nodes after {max_tries} tries")


def erdos_renyi(m: int, p: float, seed: int, max_tries: int = 1000) -> Topology:
    """G(m, p), redrawn with successive seeds until connected."""
    for attempt in range(max_tries):
        topo = _from_nx(nx.gnp_random_graph(m, p, seed=seed + attempt))
        if topo.is_connected():
            return topo
    raise ValueError(f"no connected G({m}, {p}) after {max_tries} tries")


def load_topology(path) -> Topology:
    """File format: first line ``m``, then one 0-based ``i j`` edge per line."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"empty topology file {path}")
    m = int(lines[0][0])
    return Topology.from_edges(m, [(int(a), int(b)) for a, b in lines[1:]])


def parse_topology(desc: str, m: int | None = None) -> Topology:
    """Build a topology from a short descriptor string.

    ``ring[:M]``, ``path[:M]``, ``complete[:M]``, ``star[:M]`` (M nodes in
    total), ``random-k-regular:K[:SEED]``, ``erdos-renyi:P[:SEED]``, or
    ``file:PATH``.  ``m`` supplies the node count when the string omits it.
    """
    name, _, rest = desc.partition(":")
    args = rest.split(":") if rest else []

    def node_count(arg_pos):
        if len(args) > arg_pos:
            return int(args[arg_pos])
        if m is None:
            raise ValueError(f"topology {desc!r} needs a node count")
        return m

    if name == "file":
        topo = load_topology(rest)
    elif name == "ring":
        topo = ring(node_count(0))
    elif name == "path":
        topo = path(node_count(0))
    elif name == "complete":
        topo = complete(node_count(0))
    elif name == "star":
        topo = star(node_count(0) - 1)
    elif name == "random-k-regular":
        topo = random_regular(node_count(2), int(args[0]), int(args[1]) if len(args) > 1 else 0)
    elif name == "erdos-renyi":
        topo = erdos_renyi(node_count(2), float(args[0]), int(args[1]) if len(args) > 1 else 0)
    else:
        raise ValueError(f"unknown topology {desc!r}")
    if m is not None and topo.m != m:
        raise ValueError(f"topology {desc!r} has {topo.m} nodes, expected {m}")
    return topo


def build_metropolis_matrix(topo: Topology) -> np.ndarray:
    """Metropolis-Hastings weights: ``1/(1 + max(deg i, deg j))`` per edge.

    Symmetric with rows summing to one, hence doubly stochastic on any
    connected graph.
    """
    if not topo.is_connected():
        raise ValueError("topology is not connected")
    B = np.zeros((topo.m, topo.m))
    for i, j in topo.edges:
        B[i, j] = B[j, i] = 1.0 / (1.0 + max(topo.degree(i), topo.degree(j)))
    for i in range(topo.m):
        B[i, i] = 1.0 - core.seq_sum(B[i])
    check_mixing_matrix(B, topo)
    return B


def check_mixing_matrix(B: np.ndarray, topo: Topology | None = None, tol: float = 1e-12):
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("mixing matrix must be square")
    if np.any(B < 0):
        raise ValueError("mixing matrix has negative entries")
    if np.max(np.abs(B.sum(axis=1) - 1.0)) > tol:
        raise ValueError("mixing matrix rows do not sum to 1")
    if np.max(np.abs(B.sum(axis=0) - 1.0)) > tol:
        raise ValueError("mixing matrix columns do not sum to 1")
    if topo is not None:
        if topo.m != B.shape[0]:
            raise ValueError("mixing matrix size does not match topology")
        for i, j in zip(*np.nonzero(B)):
            if i != j and (min(i, j), max(i, j)) not in topo.edges:
                raise ValueError(f"B[{i}, {j}] > 0 but ({i}, {j}) is not an edge")


@dataclass
class PushSumState:
    node_id: int
    v: np.ndarray
    w: float

    @property
    def estimate(self) -> np.ndarray:
        return self.v / self.w


@dataclass
class GossipReport:
    rounds: int
    max_rel_error: float
    true_average: np.ndarray
    errors: list = field(default_factory=list)          # per round, incl. round 0
    value_drift: list = field(default_factory=list)     # max |sum v_t - sum v_0|
    weight_drift: list = field(default_factory=list)    # |sum w_t - sum w_0|


class PushSumMixer:
    """Precomputed share pattern for one mixing matrix and share rule.

    ``rngs`` (one generator per node) is required in randomized mode.
    """

    def __init__(self, B: np.ndarray, mode: str = "deterministic", rngs=None):
        if mode not in MODES:
            raise ValueError(f"gossip mode must be one of {MODES}")
        self.B = np.asarray(B, dtype=np.float64)
        self.m = self.B.shape[0]
        self.mode = mode
        self.support = [np.flatnonzero(self.B[i] > 0) for i in range(self.m)]
        self.shares = [self.B[i, s] for i, s in enumerate(self.support)]
        self.peers = [s[s != i] for i, s in enumerate(self.support)]
        if mode == "randomized" and (rngs is None or len(rngs) != self.m):
            raise ValueError("randomized gossip needs one generator per node")
        self.rngs = rngs
        self._powers: dict[int, np.ndarray] = {}

    def composed(self, rounds: int) -> np.ndarray:
        """``B^rounds`` built by repeated ordered products (cached)."""
        if self.mode != "deterministic":
            raise ValueError("only deterministic rounds compose into one operator")
        P = self._powers.get(rounds)
        if P is None:
            P = np.eye(self.m)
            for _ in range(rounds):
                P = ordered_matmul(P, self.B)
            self._powers[rounds] = P
        return P

    def apply_composed(self, V: np.ndarray, W: np.ndarray, rounds: int):
        """Deliver ``rounds`` rounds at once: ``V <- (B^rounds)^T V``."""
        P = self.composed(rounds)
        new_v = np.zeros_like(V)
        new_w = np.zeros_like(W)
        for i in range(self.m):
            new_v += P[i][:, None] * V[i]
            new_w += P[i] * W[i]
        return new_v, new_w

    def outgoing(self, i: int, v: np.ndarray, w: float):
        """Shares node ``i`` sends this round, as ``(dst, v_share, w_share)``."""
        if self.mode == "deterministic":
            return [(int(j), b * v, b * w) for j, b in zip(self.support[i], self.shares[i])]
        peers = self.peers[i]
        if len(peers) == 0:
            return [(i, v, w)]
        j = int(peers[self.rngs[i].integers(len(peers))])
        half_v, half_w = 0.5 * v, 0.5 * w
        return sorted([(i, half_v, half_w), (j, half_v, half_w)], key=lambda s: s[0])

    def round(self, V: np.ndarray, W: np.ndarray):
        new_v = np.zeros_like(V)
        new_w = np.zeros_like(W)
        if self.mode == "deterministic":
            for i in range(self.m):
                s = self.support[i]
                new_v[s] += self.shares[i][:, None] * V[i]
                new_w[s] += self.shares[i] * W[i]
            return new_v, new_w
        for i in range(self.m):
            for j, sv, sw in self.outgoing(i, V[i], W[i]):
                new_v[j] += sv
                new_w[j] += sw
        return new_v, new_w


def ordered_matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``A @ B`` with each entry summed left to right over the inner index."""
    return np.cumsum(A[:, :, None] * B[None, :, :], axis=1)[:, -1, :]


def push_sum_round(states: Sequence[PushSumState], B: np.ndarray, mode: str = "deterministic",
                   rngs=None) -> list[PushSumState]:
    """One Push-Sum round over per-node states (returns new states)."""
    mixer = PushSumMixer(B, mode, rngs)
    V = np.stack([np.atleast_1d(np.asarray(s.v, dtype=np.float64)) for s in states])
    W = np.array([s.w for s in states], dtype=np.float64)
    V, W = mixer.round(V, W)
    return [PushSumState(s.node_id, V[k], float(W[k])) for k, s in enumerate(states)]


def _stack(values):
    V = np.array(values, dtype=np.float64)
    scalar = V.ndim == 1
    if scalar:
        V = V[:, None]
    if V.ndim != 2:
        raise ValueError("values must be one vector (or scalar) per node")
    return V, scalar


def _rel_error(est: np.ndarray, truth: np.ndarray) -> float:
    err = max(core.l2_norm(row - truth) for row in est)
    scale = core.l2_norm(truth)
    return err / scale if scale > 0 else err


def true_average(V: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Weighted network average ``sum(v) / sum(w)`` (diagnostics only)."""
    return np.cumsum(V, axis=0)[-1] / core.seq_sum(W)


def push_vector(values, B: np.ndarray, rounds: int, mode: str = "deterministic",
                weights=None, rngs=None, record: bool = False, mixer: PushSumMixer | None = None,
                compose: bool = False):
    """Run Push-Vector from ``v_0 = values``, ``w_0 = weights`` (default 1).

    Returns ``(estimates, report)``; ``estimates[i] = v_i / w_i`` after
    ``rounds`` rounds.  The report's ``max_rel_error`` is
    ``max_i ||est_i - avg|| / ||avg||`` against the centrally computed
    average (absolute error if the average is zero).  With ``record`` the
    per-round error and mass drift are kept as well.

    ``compose`` (deterministic mode, no ``record``) applies the precomputed
    ``rounds``-round operator in one step instead of round by round; the
    result equals the round-by-round one up to rounding.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    V, scalar = _stack(values)
    W = np.ones(V.shape[0]) if weights is None else np.array(weights, dtype=np.float64)
    if W.shape != (V.shape[0],) or np.any(W <= 0):
        raise ValueError("need one positive protocol weight per node")
    mixer = mixer or PushSumMixer(B, mode, rngs)
    if mixer.m != V.shape[0]:
        raise ValueError("values and mixing matrix disagree on node count")
    truth = true_average(V, W)
    mass_v, mass_w = np.cumsum(V, axis=0)[-1], core.seq_sum(W)
    report = GossipReport(rounds, math.nan, truth)

    def observe(V, W):
        report.errors.append(_rel_error(V / W[:, None], truth))
        report.value_drift.append(float(np.max(np.abs(np.cumsum(V, axis=0)[-1] - mass_v))))
        report.weight_drift.append(abs(core.seq_sum(W) - mass_w))

    if compose and not record and mixer.mode == "deterministic":
        V, W = mixer.apply_composed(V, W, rounds)
        est = V / W[:, None]
        report.max_rel_error = _rel_error(est, truth)
        return (est[:, 0] if scalar else est), report
    if record:
        observe(V, W)
    for _ in range(rounds):
        V, W = mixer.round(V, W)
        if record:
            observe(V, W)
    est = V / W[:, None]
    report.max_rel_error = report.errors[-1] if record else _rel_error(est, truth)
    return (est[:, 0] if scalar else est), report


def rounds_for_accuracy(topo: Topology, gamma: float, K: float = 2.0) -> int:
    """Conservative round budget ``ceil(K * m * ln(1/gamma))``."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    return math.ceil(K * topo.m * math.log(1.0 / gamma))


def measured_rounds_for_accuracy(topo: Topology, gamma: float, B: np.ndarray | None = None,
                                 probe=None, max_rounds: int = 100_000) -> int:
    """Smallest deterministic-mode round count whose probe error is ``<= gamma``.

    The default probe puts ``i + 1`` on node ``i``.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    B = build_metropolis_matrix(topo) if B is None else B
    V, _ = _stack(np.arange(1.0, topo.m + 1.0) if probe is None else probe)
    W = np.ones(topo.m)
    truth = true_average(V, W)
    mixer = PushSumMixer(B)
    for r in range(max_rounds + 1):
        if _rel_error(V / W[:, None], truth) <= gamma:
            return r
        V, W = mixer.round(V, W)
    raise RuntimeError(f"probe did not reach {gamma} within {max_rounds} rounds")
