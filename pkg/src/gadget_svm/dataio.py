"""LIBSVM text parsing, datasets, and horizontal partitioning across nodes."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .core import SparseVector

_LABELS = {1.0: 1, -1.0: -1, 0.0: -1}


class LibsvmParseError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class LabeledInstance:
    x: SparseVector
    y: int

    def __post_init__(self):
        if self.y not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.y!r}")


@dataclass(eq=False)
class Dataset:
    """A list of labelled instances with a shared dimensionality ``dim``."""

    instances: Sequence[LabeledInstance]
    dim: int
    name: str = ""

    def __post_init__(self):
        self.instances = tuple(self.instances)
        top = max((inst.x.dim for inst in self.instances), default=0)
        if self.dim < top:
            raise ValueError(f"dim {self.dim} smaller than instance dim {top}")

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """CSR design matrix (rows keep entry order, so row dots match ``core.dot``)."""
        indptr = np.zeros(len(self.instances) + 1, dtype=np.int64)
        for i, inst in enumerate(self.instances):
            indptr[i + 1] = indptr[i] + len(inst.x)
        if self.instances:
            cols = np.concatenate([inst.x.positions for inst in self.instances])
            vals = np.concatenate([inst.x.values for inst in self.instances])
        else:
            cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0)
        return sp.csr_matrix((vals, cols, indptr), shape=(len(self.instances), self.dim))

    @cached_property
    def labels(self) -> np.ndarray:
        return np.array([inst.y for inst in self.instances], dtype=np.float64)

    def with_dim(self, dim: int) -> "Dataset":
        return Dataset(self.instances, dim, self.name)


@dataclass(eq=False)
class Shard:
    """One node's horizontal slice of a dataset."""

    node_id: int
    instances: Sequence[LabeledInstance]
    dim: int
    name: str = ""
    dataset: Dataset = field(init=False, repr=False)

    def __post_init__(self):
        self.instances = tuple(self.instances)
        if not self.instances:
            raise ValueError(f"shard {self.node_id} is empty")
        self.dataset = Dataset(self.instances, self.dim, self.name)

    @property
    def n(self) -> int:
        return len(self.instances)


def _parse_label(token: str, lineno):
    try:
        value = float(token)
    except ValueError:
        raise LibsvmParseError(f"bad label {token!r}", lineno) from None
    if value not in _LABELS:
        raise LibsvmParseError(f"unsupported label {token!r}", lineno)
    return _LABELS[value]


def parse_libsvm_line(line: str, dim_hint: int | None = None,
                      lineno: int | None = None) -> LabeledInstance:
    """Parse ``label idx:val idx:val ...`` into a :class:`LabeledInstance`.

    Labels ``+1``/``1`` map to +1 and ``-1``/``0`` to -1.  Explicit zero
    values are dropped so the sparse vector stays canonical.  The vector's
    ``dim`` is ``dim_hint`` if given, otherwise its largest index.
    """
    tokens = line.split()
    if not tokens:
        raise LibsvmParseError("empty line", lineno)
    y = _parse_label(tokens[0], lineno)
    idx, val = [], []
    prev = 0
    for tok in tokens[1:]:
        key, sep, raw = tok.partition(":")
        if not sep:
            raise LibsvmParseError(f"malformed token {tok!r}", lineno)
        try:
            j, v = int(key), float(raw)
        except ValueError:
            raise LibsvmParseError(f"malformed token {tok!r}", lineno) from None
        if j <= prev:
            raise LibsvmParseError(f"index {j} not increasing", lineno)
        if not np.isfinite(v):
            raise LibsvmParseError(f"non-finite value in {tok!r}", lineno)
        prev = j
        if v != 0.0:
            idx.append(j)
            val.append(v)
    dim = prev if dim_hint is None else dim_hint
    if prev > dim:
        raise LibsvmParseError(f"index {prev} exceeds dim {dim}", lineno)
    return LabeledInstance(SparseVector(np.array(idx, dtype=np.int64),
                                        np.array(val, dtype=np.float64), dim), y)


def format_libsvm_line(inst: LabeledInstance) -> str:
    parts = ["+1" if inst.y > 0 else "-1"]
    parts += [f"{j}:{v!r}" for j, v in inst.x.pairs()]
    return " ".join(parts)


def load_dataset(path, dim: int | None = None, name: str | None = None) -> Dataset:
    """Read a LIBSVM file.  ``dim`` overrides the inferred dimensionality."""
    path = Path(path)
    raw = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                raw.append(parse_libsvm_line(line, None, lineno))
    if not raw:
        raise ValueError(f"empty dataset: {path}")
    top = max(inst.x.dim for inst in raw)
    if dim is None:
        dim = top
    elif dim < top:
        raise ValueError(f"--dim {dim} is smaller than max feature index {top} in {path}")
    instances = [LabeledInstance(SparseVector(i.x.indices, i.x.values, dim), i.y) for i in raw]
    return Dataset(instances, dim, name or path.name)


def partition(ds: Dataset, m: int, seed: int) -> list[Shard]:
    """Shuffle with ``seed`` and deal ``ds`` into ``m`` near-equal shards.

    The first ``N mod m`` shards receive one extra instance.
    """
    n = len(ds)
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > n:
        raise ValueError(f"cannot split {n} instances over {m} nodes")
    order = np.random.default_rng(seed).permutation(n)
    return [Shard(i, [ds.instances[k] for k in chunk], ds.dim, f"{ds.name}[{i}]")
            for i, chunk in enumerate(np.array_split(order, m))]
