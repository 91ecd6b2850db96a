"""Vector primitives shared by the rest of the package.

Dense vectors are plain ``float64`` numpy arrays (0-based storage).  Sparse
vectors keep LIBSVM's 1-based feature ids; ``SparseVector.positions`` gives the
0-based offsets into a dense vector (``index - 1``).

Every reduction accumulates sequentially in entry order, so results are
bit-reproducible and independent of BLAS threading.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Raised when a sparse vector does not fit into a dense one."""


def as_dense(values, length: int | None = None) -> np.ndarray:
    """Return ``values`` as a finite 1-D float64 array (a copy)."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"dense vector must be 1-D, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise DimensionError(f"expected length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("dense vector has non-finite entries")
    return arr


def zeros(d: int) -> np.ndarray:
    return np.zeros(d, dtype=np.float64)


def seq_sum(values: np.ndarray) -> float:
    """Left-to-right sum (no pairwise blocking)."""
    if values.shape[0] == 0:
        return 0.0
    return float(np.cumsum(values)[-1])


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Sparse feature vector with 1-based, strictly increasing indices."""

    indices: np.ndarray
    values: np.ndarray
    dim: int
    positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        val = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if idx.shape != val.shape:
            raise ValueError("indices and values differ in length")
        if idx.size:
            if idx[0] < 1 or idx[-1] > self.dim:
                raise ValueError(f"feature index out of range 1..{self.dim}")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("feature indices must be strictly increasing")
        if not np.all(np.isfinite(val)):
            raise ValueError("sparse vector has non-finite values")
        if np.any(val == 0.0):
            raise ValueError("explicit zero entries are not allowed")
        idx.flags.writeable = False
        val.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)
        object.__setattr__(self, "positions", idx - 1)

    @classmethod
    def from_pairs(cls, pairs, dim: int) -> "SparseVector":
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=np.int64),
                   np.array([p[1] for p in pairs], dtype=np.float64), dim)

    @classmethod
    def from_dense(cls, dense) -> "SparseVector":
        dense = np.asarray(dense, dtype=np.float64)
        nz = np.flatnonzero(dense)
        return cls(nz + 1, dense[nz], dense.shape[0])

    def __len__(self):
        return int(self.indices.shape[0])

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (self.dim == other.dim
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.dim, self.indices.tobytes(), self.values.tobytes()))

    def densify(self, length: int | None = None) -> np.ndarray:
        length = self.dim if length is None else length
        if self.dim > length:
            raise DimensionError(f"sparse dim {self.dim} exceeds dense length {length}")
        out = zeros(length)
        out[self.positions] = self.values
        return out

    def pairs(self):
        return list(zip(self.indices.tolist(), self.values.tolist()))


def _check_fits(x: SparseVector, w: np.ndarray):
    if x.dim > w.shape[0]:
        raise DimensionError(f"sparse dim {x.dim} exceeds dense length {w.shape[0]}")


def dot(x: SparseVector, w: np.ndarray) -> float:
    """Inner product of a sparse and a dense vector, summed in entry order."""
    _check_fits(x, w)
    return seq_sum(x.values * w[x.positions])


def scale_add(a: float, u: np.ndarray, b: float, x: SparseVector) -> np.ndarray:
    """Return ``a*u + b*x`` as a new dense vector of ``u``'s length."""
    _check_fits(x, u)
    out = a * u
    if b != 0.0 and len(x):
        out[x.positions] += b * x.values
    return out


def l2_norm(w: np.ndarray) -> float:
    return float(np.sqrt(seq_sum(w * w)))


def rng_stream(seed: int, node_id: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent generator keyed by ``(seed, node_id, stream)``.

    Node ``i``'s stream does not depend on how many nodes exist, and the
    centralized trainer uses node 0's stream, so a one-node network replays it.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(node_id), int(stream)]))
