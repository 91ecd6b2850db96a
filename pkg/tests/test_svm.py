import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from gadget_svm import core, evaluation
from gadget_svm.core import SparseVector
from gadget_svm.dataio import LabeledInstance
from gadget_svm.svm import (HyperParams, Model, hinge_loss, local_step, mean_hinge_loss,
                            pegasos_train, primal_objective, project_to_ball,
                            subgradient_step, violating_set_step, zero_one_error,
                            InstanceSampler)

from conftest import make_dataset, random_dataset


def inst(pairs, y, dim):
    return LabeledInstance(SparseVector.from_pairs(pairs, dim), y)


def e1_pair():
    return make_dataset([([1.0, 0.0], 1), ([-1.0, 0.0], -1)])


class TestHinge:
    def test_zero_weights(self):
        assert hinge_loss(np.zeros(3), inst([(2, 4.0)], -1, 3)) == 1.0

    def test_satisfied_margin(self):
        assert hinge_loss(np.array([2.0, 0.0]), inst([(1, 1.0)], 1, 2)) == 0.0

    def test_violated_margin(self):
        assert hinge_loss(np.array([0.5, 0.0]), inst([(1, 1.0)], -1, 2)) == 1.5


class TestObjective:
    def test_zero_weights(self):
        ds = random_dataset(np.random.default_rng(0), 7, 4)
        assert primal_objective(np.zeros(4), ds, 123.0) == 1.0

    def test_single_instance(self):
        ds = make_dataset([([1.0], 1)])
        assert primal_objective(np.array([1.0]), ds, 2.0) == 1.0

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(4)
        ds = random_dataset(rng, 10, 5)
        w = rng.normal(size=5)
        lam = 0.3
        loss = 0.0
        for inst_ in ds:
            dense = inst_.x.densify(5)
            score = 0.0
            for j in range(5):
                score += w[j] * dense[j]
            loss += max(0.0, 1.0 - inst_.y * score)
        oracle = lam / 2 * sum(v * v for v in w) + loss / len(ds)
        assert primal_objective(w, ds, lam) == pytest.approx(oracle, rel=1e-12, abs=1e-12)


class TestSubgradientStep:
    def test_first_step_forgets_w(self):
        x = inst([(1, 2.0), (3, -1.0)], -1, 3)
        out = subgradient_step(np.array([-0.1, 0.0, 0.0]), x, 0.5, 1)
        assert out.tolist() == [-4.0, 0.0, 2.0]

    def test_satisfied_is_pure_shrinkage(self):
        w = np.array([5.0, 0.0])
        assert np.array_equal(subgradient_step(w, inst([(1, 1.0)], 1, 2), 0.1, 5), 0.8 * w)

    def test_hand_expanded_example(self):
        out = subgradient_step(np.array([1.0, 0.0]), inst([(2, 1.0)], 1, 2), 1.0, 2)
        shrink, eta = 1 - 1 / 2, 1 / (1.0 * 2)
        assert out.tolist() == [shrink * 1.0, eta * 1.0] == [0.5, 0.5]

    def test_rejects_bad_t(self):
        with pytest.raises(ValueError):
            subgradient_step(np.zeros(1), inst([(1, 1.0)], 1, 1), 1.0, 0)


class TestProjection:
    def test_inside_unchanged(self):
        w = np.array([0.3, 0.4])
        assert project_to_ball(w, 1.0) is w

    def test_boundary_scaling(self):
        assert project_to_ball(np.array([0.0, 2.0]), 1.0).tolist() == [0.0, 1.0]

    def test_scaled_by_half(self):
        w = np.array([4.0, 0.0, 0.0])
        out = project_to_ball(w, 0.25)
        assert np.allclose(out, 0.5 * w, rtol=1e-15) and core.l2_norm(out) == 2.0

    @settings(max_examples=300, deadline=None)
    @given(hnp.arrays(np.float64, st.integers(1, 20), elements=st.floats(-1e6, 1e6)),
           st.floats(1e-8, 1e4))
    def test_idempotent_and_inside(self, w, lam):
        once = project_to_ball(w, lam)
        assert core.l2_norm(once) <= 1.0 / math.sqrt(lam)
        assert np.array_equal(project_to_ball(once, lam), once)


@settings(max_examples=200, deadline=None)
@given(hnp.arrays(np.float64, 4, elements=st.floats(-3, 3)),
       hnp.arrays(np.float64, 4, elements=st.floats(-3, 3)), st.sampled_from([-1, 1]))
def test_subgradient_matches_finite_difference(w, xd, y):
    x = SparseVector.from_dense(xd)
    li = LabeledInstance(x, y)
    margin = y * core.dot(x, w)
    if abs(margin - 1.0) < 1e-3:
        return
    grad = -y * xd if margin < 1 else np.zeros(4)
    h = 1e-7
    for j in range(4):
        step = np.zeros(4)
        step[j] = h
        fd = (hinge_loss(w + step, li) - hinge_loss(w - step, li)) / (2 * h)
        assert abs(fd - grad[j]) <= 1e-6 * max(1.0, abs(grad[j]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100))
def test_mean_loss_is_lipschitz_in_data_radius(seed, scale):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, 12, 5)
    w1, w2 = rng.normal(scale=scale, size=5), rng.normal(scale=scale, size=5)
    lhs = abs(mean_hinge_loss(w1, ds) - mean_hinge_loss(w2, ds))
    assert lhs <= evaluation.data_radius(ds) * core.l2_norm(w1 - w2) * (1 + 1e-12) + 1e-12


class TestZeroOneError:
    def test_perfect_and_negated(self):
        ds = e1_pair()
        w = np.array([1.0, 0.0])
        assert zero_one_error(w, ds) == 0.0
        assert zero_one_error(-w, ds) == 1.0

    def test_ties_predict_positive(self):
        ds = make_dataset([([1.0, 0.0], 1), ([0.0, 1.0], -1), ([0.0, 2.0], 1)])
        w = np.array([1.0, 0.0])
        assert zero_one_error(w, ds) == pytest.approx(1 / 3)
        assert zero_one_error(-w, ds) == pytest.approx(2 / 3)

    def test_accepts_model(self):
        ds = e1_pair()
        hp = HyperParams(1.0, 1)
        assert zero_one_error(Model(np.array([1.0, 0.0]), hp, 1), ds) == 0.0


def test_hyperparams_validation():
    for kwargs in ({"lam": 0.0, "T": 1}, {"lam": 1.0, "T": 0}, {"lam": 1.0, "T": 1, "epsilon": 0},
                   {"lam": 1.0, "T": 1, "loss_mode": "x"}, {"lam": 1.0, "T": 1, "patience": 0}):
        with pytest.raises(ValueError):
            HyperParams(**kwargs)


class TestPegasos:
    def test_separable_pair_is_learned(self):
        ds = e1_pair()
        model, trace = pegasos_train(ds, HyperParams(0.1, 2000, epsilon=1e-12))
        assert zero_one_error(model, ds) == 0.0
        assert trace[-1].t == model.iterations == 2000

    def test_first_iteration_is_scaled_sample(self):
        ds = make_dataset([([3.0, -1.0], -1), ([1.0, 2.0], 1)])
        lam = 0.5
        hp = HyperParams(lam, 1, seed=11)
        model, _ = pegasos_train(ds, hp)
        k = InstanceSampler(core.rng_stream(11, 0), len(ds))()
        first = ds.instances[k]
        expected = project_to_ball(first.y / lam * first.x.densify(2), lam)
        assert np.array_equal(model.w, expected)

    def test_reproducible(self):
        ds = random_dataset(np.random.default_rng(2), 40, 6)
        hp = HyperParams(0.05, 500, epsilon=1e-12, seed=3)
        a, ta = pegasos_train(ds, hp)
        b, tb = pegasos_train(ds, hp)
        assert np.array_equal(a.w, b.w) and np.array_equal(a.w_avg, b.w_avg)
        assert [r.mean_objective for r in ta] == [r.mean_objective for r in tb]

    def test_weights_stay_in_ball(self):
        ds = random_dataset(np.random.default_rng(3), 30, 4)
        hp = HyperParams(0.01, 300, epsilon=1e-12)
        radius = hp.radius
        norms = []
        pegasos_train(ds, hp, callback=lambda t, w: norms.append(core.l2_norm(w)))
        assert len(norms) == 300 and max(norms) <= radius

    def test_epsilon_stop(self):
        ds = e1_pair()
        model, trace = pegasos_train(ds, HyperParams(0.1, 100_000, epsilon=1e-3))
        assert model.iterations < 100_000
        assert trace[-1].max_delta < 1e-3

    def test_objective_stabilizes_on_separable_set(self, toy):
        short, _ = pegasos_train(toy, HyperParams(0.1, 2000, epsilon=1e-12))
        long, _ = pegasos_train(toy, HyperParams(0.1, 20_000, epsilon=1e-12))
        f_short = primal_objective(short.w_avg, toy, 0.1)
        f_long = primal_objective(long.w_avg, toy, 0.1)
        assert abs(f_short - f_long) <= 0.1 * f_long

    def test_trace_cadence_and_columns(self):
        ds = e1_pair()
        _, trace = pegasos_train(ds, HyperParams(0.1, 1000, epsilon=1e-12), test=ds)
        assert [r.t for r in trace] == list(range(5, 1001, 5))
        assert "train_error" in trace[0].columns
        assert trace[-1].mean_test_error == 0.0

    def test_violating_set_mode(self):
        ds = e1_pair()
        model, _ = pegasos_train(ds, HyperParams(0.1, 50, loss_mode="violating-set-mean"))
        assert zero_one_error(model, ds) == 0.0


def test_violating_set_step_oracle():
    ds = make_dataset([([1.0, 0.0], 1), ([0.0, 1.0], -1), ([2.0, 0.0], 1)])
    w = np.array([0.75, 0.0])
    lam, t = 0.5, 3
    # margins 0.75, 0, 1.5 -> first two violate
    direction = np.array([1.0, 0.0]) + -1 * np.array([0.0, 1.0])
    expected = (1 - 1 / t) * w + (1 / (lam * t)) / 3 * direction
    assert np.allclose(violating_set_step(w, ds, lam, t), expected, rtol=0, atol=1e-15)


def test_local_step_pre_projection():
    ds = make_dataset([([1.0], 1)])
    hp = HyperParams(0.01, 1, project_pre_gossip=True)
    sampler = InstanceSampler(core.rng_stream(0), 1)
    assert local_step(np.zeros(1), ds, sampler, hp, 1).tolist() == [10.0]
