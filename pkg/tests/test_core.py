import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from gadget_svm import core
from gadget_svm.core import DimensionError, SparseVector, dot, l2_norm, scale_add


def sv(pairs, dim):
    return SparseVector.from_pairs(pairs, dim)


def test_dot_empty_vector_is_zero():
    assert dot(sv([], 5), np.arange(5.0)) == 0.0


def test_dot_unit_basis():
    assert dot(sv([(1, 1.0)], 3), np.array([1.0, 0.0, 0.0])) == 1.0


def test_dot_matches_dense_expansion():
    x = sv([(3, 0.5), (7, 2.0)], 8)
    w = np.full(8, 0.25)
    oracle = sum(a * b for a, b in zip(x.densify().tolist(), w.tolist()))
    assert oracle == 0.625
    assert dot(x, w) == 0.625


def test_dot_rejects_short_dense():
    with pytest.raises(DimensionError):
        dot(sv([(4, 1.0)], 4), np.zeros(3))


def test_scale_add_identity():
    u = np.array([1.5, -2.0, 3.0])
    assert np.array_equal(scale_add(1.0, u, 0.0, sv([(2, 9.0)], 3)), u)


def test_scale_add_annihilation():
    out = scale_add(0.0, np.array([7.0, -7.0]), 1.0, sv([(2, 3.0)], 2))
    assert out.tolist() == [0.0, 3.0]


def test_scale_add_elementwise():
    out = scale_add(0.5, np.array([2.0, 2.0]), 2.0, sv([(1, 1.0)], 2))
    assert out.tolist() == [3.0, 1.0]


def test_scale_add_does_not_mutate_input():
    u = np.array([1.0, 2.0])
    scale_add(2.0, u, 1.0, sv([(1, 1.0)], 2))
    assert u.tolist() == [1.0, 2.0]


@pytest.mark.parametrize("w, expected", [([0.0, 0.0], 0.0), ([1.0, 0.0, 0.0], 1.0),
                                         ([3.0, 4.0], 5.0)])
def test_l2_norm_examples(w, expected):
    assert l2_norm(np.array(w)) == expected


class TestSparseVectorValidation:
    def test_zero_value_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            sv([(1, 0.0)], 2)

    def test_unsorted_rejected(self):
        with pytest.raises(ValueError, match="increasing"):
            sv([(2, 1.0), (1, 1.0)], 2)

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError):
            sv([(2, 1.0), (2, 1.0)], 2)

    def test_index_out_of_range(self):
        with pytest.raises(ValueError, match="range"):
            sv([(0, 1.0)], 2)
        with pytest.raises(ValueError, match="range"):
            sv([(3, 1.0)], 2)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            sv([(1, math.inf)], 2)

    def test_arrays_are_read_only(self):
        x = sv([(1, 1.0)], 2)
        with pytest.raises(ValueError):
            x.values[0] = 5.0

    def test_positions_are_zero_based(self):
        assert sv([(1, 1.0), (4, 2.0)], 4).positions.tolist() == [0, 3]

    def test_equality_and_hash(self):
        a, b = sv([(1, 1.0)], 3), sv([(1, 1.0)], 3)
        assert a == b and hash(a) == hash(b)
        assert a != sv([(1, 1.0)], 4)

    def test_from_dense_round_trip(self):
        dense = np.array([0.0, 1.5, 0.0, -2.0])
        assert np.array_equal(SparseVector.from_dense(dense).densify(), dense)


def test_as_dense_checks():
    with pytest.raises(DimensionError):
        core.as_dense([1.0, 2.0], length=3)
    with pytest.raises(ValueError):
        core.as_dense([math.nan])


def test_rng_streams_are_independent_and_reproducible():
    a = core.rng_stream(3, 1, 0).random(4)
    assert np.array_equal(a, core.rng_stream(3, 1, 0).random(4))
    assert not np.array_equal(a, core.rng_stream(3, 2, 0).random(4))
    assert not np.array_equal(a, core.rng_stream(3, 1, 1).random(4))


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def sparse_dense_pairs(draw):
    d = draw(st.integers(1, 30))
    w = draw(hnp.arrays(np.float64, d, elements=finite))
    dense_x = draw(hnp.arrays(np.float64, d, elements=finite))
    return SparseVector.from_dense(dense_x), w


@settings(max_examples=200, deadline=None)
@given(sparse_dense_pairs())
def test_dot_matches_dense_dot(pair):
    x, w = pair
    oracle = math.fsum(a * b for a, b in zip(x.densify(), w))
    scale = math.fsum(abs(a * b) for a, b in zip(x.densify(), w))
    assert abs(dot(x, w) - oracle) <= 1e-12 * max(scale, 1e-300)


# squares of the scaled entries must stay clear of underflow
scales = st.one_of(st.just(0.0), st.floats(1e-50, 1e3), st.floats(-1e3, -1e-50))
entries = st.one_of(st.just(0.0), st.floats(1e-50, 1e3), st.floats(-1e3, -1e-50))


@settings(max_examples=200, deadline=None)
@given(hnp.arrays(np.float64, st.integers(1, 30), elements=entries), scales)
def test_norm_is_homogeneous(w, c):
    d = w.shape[0]
    lhs = l2_norm(scale_add(c, w, 0.0, SparseVector.from_pairs([], d)))
    rhs = abs(c) * l2_norm(w)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(sparse_dense_pairs(), finite, finite)
def test_operations_are_pure(pair, a, b):
    x, w = pair
    w_copy = w.copy()
    assert dot(x, w) == dot(x, w)
    assert np.array_equal(scale_add(a, w, b, x), scale_add(a, w, b, x))
    assert np.array_equal(w, w_copy)
