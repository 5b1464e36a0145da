import numpy as np
import pytest

from confidyn.dynamics import SystemState, step_agentwise
from confidyn.errors import InvalidParameterError, InvalidStateError, MappingUndefinedError
from confidyn.experiments import star_graph
from confidyn.graphs import FixedSequence, GraphSnapshot
from confidyn.learning import (
    BanditInstance,
    BWRSystem,
    GaussianBelief,
    bandit_engine_prediction,
    bandit_replicates,
    bandit_run,
    bayes_update,
    bwr_engine_prediction,
    bwr_expected_system,
    bwr_replicates,
    bwr_step,
    summarize,
)


class ZeroNormals:
    def standard_normal(self, shape):
        return np.zeros(shape)


class TestBayesUpdate:
    def test_precision_weighted_mean(self):
        b = bayes_update(GaussianBelief([1.0], 3.0), [5.0], 1.0)
        assert b.mu.tolist() == [2.0] and b.tau == 4.0

    def test_flat_prior_adopts_datum(self):
        b = bayes_update(GaussianBelief([7.0], 0.0), [-1.0], 2.0)
        assert b.mu.tolist() == [-1.0] and b.tau == 2.0

    def test_infinite_signal(self):
        b = bayes_update(GaussianBelief([1.0], 5.0), [3.0], np.inf)
        assert b.mu.tolist() == [3.0] and np.isinf(b.tau)

    def test_zero_signal_precision_rejected(self):
        with pytest.raises(InvalidParameterError):
            bayes_update(GaussianBelief([0.0], 1.0), [1.0], 0.0)

    def test_negative_prior_rejected(self):
        with pytest.raises(InvalidParameterError):
            GaussianBelief([0.0], -1.0)


class TestBWR:
    def test_truth_never_moves(self):
        sys0 = BWRSystem([0.0, 1.0, -1.0], [1.0, 1.0, 1.0], 1.0)
        s = bwr_step(sys0, star_graph(), np.random.default_rng(0))
        assert s.mu[0, 0] == 0.0 and np.isinf(s.tau[0])

    def test_precision_bookkeeping(self):
        sys0 = BWRSystem([0.0, 1.0, -1.0], [1.0, 2.0, 3.0], 0.5)
        s = bwr_step(sys0, star_graph(), np.random.default_rng(0))
        assert s.tau[1:].tolist() == [3.0, 3.5]

    def test_noiseless_step_is_engine_step(self):
        rng = np.random.default_rng(3)
        g = GraphSnapshot(4, (frozenset(), frozenset({0, 2}), frozenset({1, 3}), frozenset({2})))
        sys0 = BWRSystem(rng.normal(size=(4, 2)), [1.0, 2.0, 0.5, 4.0], 2.0)
        got = bwr_step(sys0, g, ZeroNormals())
        state = step_agentwise(bwr_expected_system(sys0), g)
        assert np.allclose(got.mu, state.x, atol=1e-14)
        assert np.allclose(got.tau[1:] / 2.0, state.w[1:], atol=1e-14)

    def test_expected_mapping(self):
        sys0 = BWRSystem([0.0, 1.0, -1.0], [9.0, 2.0, 3.0], 4.0)
        st = bwr_expected_system(sys0)
        assert st.w.tolist() == [0.0, 0.5, 0.75]

    def test_zero_signal_precision(self):
        sys0 = BWRSystem([0.0, 1.0, -1.0], [1.0, 1.0, 1.0], 0.0)
        s = bwr_step(sys0, star_graph(), np.random.default_rng(0))
        assert np.array_equal(s.mu, sys0.mu)
        with pytest.raises(MappingUndefinedError):
            bwr_expected_system(sys0)

    def test_zero_precision_sender_rejected(self):
        sys0 = BWRSystem([0.0, 1.0, -1.0], [1.0, 1.0, 0.0], 1.0)
        with pytest.raises(InvalidStateError):
            bwr_step(sys0, star_graph(), np.random.default_rng(0))

    def test_monte_carlo_mean(self):
        sys0 = BWRSystem([0.0, 1.0, -1.0], [1.0, 1.0, 1.0], 1.0)
        seq = FixedSequence(star_graph())
        samples = bwr_replicates(sys0, seq, 6, 5, range(4000))
        comp = summarize(samples, bwr_engine_prediction(sys0, seq, 6))
        assert comp.within(4.0)

    def test_replicates_independent_of_batching(self):
        sys0 = BWRSystem([0.0, 1.0, -1.0], [1.0, 1.0, 1.0], 1.0)
        seq = FixedSequence(star_graph())
        whole = bwr_replicates(sys0, seq, 4, 9, range(10))
        parts = np.concatenate([bwr_replicates(sys0, seq, 4, 9, range(0, 3)), bwr_replicates(sys0, seq, 4, 9, range(3, 10))])
        assert np.array_equal(whole, parts)


class TestBandit:
    def test_noiseless_adopts_value(self):
        inst = BanditInstance([0.3, -2.0, 5.0], 0.0)
        tr = bandit_run(inst, 3, np.random.default_rng(0))
        assert tr.estimates[-1].tolist() == [0.3, -2.0, 5.0]
        assert tr.pulls.tolist() == [1, 1, 1]
        assert np.all(np.isinf(tr.precisions[-1]))

    def test_round_robin(self):
        tr = bandit_run(BanditInstance([0.0, 1.0], 1.0), 7, np.random.default_rng(0))
        assert tr.pulls.tolist() == [4, 3]
        assert tr.precisions[-1].tolist() == [4.0, 3.0]

    def test_sample_mean_with_flat_prior(self):
        inst = BanditInstance([2.0], 0.5)
        rng = np.random.default_rng(8)
        z = np.random.default_rng(8).standard_normal(5)
        tr = bandit_run(inst, 5, rng)
        assert tr.estimates[-1, 0] == pytest.approx(np.mean(2.0 + 0.5 * z), abs=1e-12)

    def test_unbiased_and_variance(self):
        inst = BanditInstance([0.0, 1.0], 1.0)
        samples = bandit_replicates(inst, 40, 1, range(20_000))
        pred = bandit_engine_prediction(inst, 40)
        comp = summarize(samples[:, 2:], pred[2:])
        assert comp.within(4.0)
        m = 20
        var = samples[:, -1].var(axis=0, ddof=1)
        assert np.all(np.abs(var / (1.0 / m) - 1) < 0.10)

    def test_engine_prediction_with_prior(self):
        inst = BanditInstance([4.0], 1.0, prior_mu=0.0, prior_tau=1.0)
        pred = bandit_engine_prediction(inst, 3)
        # w0 = 1: x1 = 4/2, x2 = (2*2 + 4)/3, x3 = (3*8/3 + 4)/4
        assert pred[:, 0] == pytest.approx([0.0, 2.0, 8 / 3, 3.0])

    def test_horizon_too_short(self):
        with pytest.raises(InvalidParameterError):
            bandit_run(BanditInstance([0.0, 1.0, 2.0], 1.0), 2, np.random.default_rng(0))
