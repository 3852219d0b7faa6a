import math

import numpy as np
import pytest
from scipy import stats

from codedconv.conv import CostModel
from codedconv.errors import InvalidArgumentError
from codedconv.planner import ProblemSpec, plan_coded, plan_replication, plan_uncoded
from codedconv.straggler import (
    BLOCK_TRIALS,
    CompletionTrace,
    TimeModel,
    cdf,
    finish_times,
    monte_carlo_tail,
    sample_finish_times,
    sample_time,
    simulate_trace,
    strategy_finish_time,
    survival,
    task_shift,
)

REF = ProblemSpec(4096, 2048, 8)


class TestShift:
    @pytest.mark.parametrize("s, want", [(1024, 22528.0), (2048, 49152.0), (1, 2.0)])
    def test_values(self, s, want):
        assert task_shift(s) == want

    def test_scales_with_c(self):
        assert task_shift(1024, TimeModel(cost=CostModel(3.0))) == 3 * 22528.0

    def test_natural_log(self):
        assert task_shift(5, TimeModel(cost=CostModel(1.0, "e"))) == pytest.approx(10 * math.log(10))

    def test_rejects_zero(self):
        with pytest.raises(InvalidArgumentError):
            task_shift(0)


class TestCdf:
    def test_zero_at_shift(self):
        assert cdf(1024, 22528.0) == 0.0
        assert cdf(1024, 100.0) == 0.0

    def test_two_tau(self):
        assert cdf(1024, 2 * 22528.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)

    def test_limit(self):
        assert abs(cdf(1024, 100 * 22528.0) - 1.0) < 1e-12

    def test_survival_complement(self):
        t = np.linspace(0, 10 * 22528.0, 50)
        m = TimeModel(0.7, 1.8)
        np.testing.assert_allclose(cdf(1024, t, m) + survival(1024, t, m), 1.0, atol=1e-15)

    def test_bad_model(self):
        with pytest.raises(InvalidArgumentError):
            TimeModel(mu=0.0)
        with pytest.raises(InvalidArgumentError):
            TimeModel(alpha=-1.0)


class TestSampleTime:
    def test_u_zero(self):
        assert sample_time(1024, TimeModel(), 0.0) == 22528.0

    def test_hand_inverse(self):
        got = sample_time(1024, TimeModel(), 1 - math.exp(-1))
        assert got == pytest.approx(2 * 22528.0, rel=1e-14)

    @pytest.mark.parametrize("alpha, mu", [(1, 1), (2, 0.5), (0.5, 2)])
    def test_roundtrip(self, alpha, mu):
        m = TimeModel(mu, alpha)
        u = np.random.default_rng(1).random(1000)
        np.testing.assert_allclose(cdf(1024, sample_time(1024, m, u), m), u, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("u", [1.0, -0.1, float("nan")])
    def test_rejects_u(self, u):
        with pytest.raises(InvalidArgumentError):
            sample_time(4, TimeModel(), u)

    @pytest.mark.parametrize("alpha, mu", [(1, 1), (2, 0.5), (0.5, 2)])
    def test_ks(self, alpha, mu):
        m = TimeModel(mu, alpha)
        draws = sample_time(64, m, np.random.default_rng(2).random(10_000))
        ks = stats.kstest(draws, lambda t: cdf(64, t, m)).statistic
        assert ks < 0.02


class TestTrace:
    def test_support_and_determinism(self):
        plan = plan_uncoded(REF)
        a = simulate_trace(plan, TimeModel(), seed=5)
        b = simulate_trace(plan, TimeModel(), seed=5)
        assert np.all(a.finish_times >= task_shift(1024))
        np.testing.assert_array_equal(a.finish_times, b.finish_times)
        assert a.seed == 5

    def test_mean_excess(self):
        plan = plan_coded(REF, 2048)
        tau = task_shift(2048)
        times = sample_time(2048, TimeModel(), np.random.default_rng(3).random((12_500, plan.p)))
        assert np.mean(times - tau) == pytest.approx(tau, rel=0.02)


class TestFinishTime:
    times = np.array([5.0, 1.0, 7.0, 2.0, 3.0, 9.0, 4.0, 8.0])

    def test_uncoded_is_max(self):
        plan = plan_uncoded(REF)
        assert strategy_finish_time(plan, CompletionTrace(self.times, None)) == 9.0

    def test_replication_max_of_min(self):
        plan = plan_replication(REF, 4)
        # groups (0,1,2,3), (4,5,6,7): min 1.0 and 3.0
        assert strategy_finish_time(plan, CompletionTrace(self.times, None)) == 3.0

    def test_coded_second_order_statistic(self):
        plan = plan_coded(REF, 2048)
        assert strategy_finish_time(plan, CompletionTrace(self.times, None)) == 2.0

    def test_coded_two_groups(self):
        plan = plan_coded(ProblemSpec(64, 64, 16), 32)
        rng = np.random.default_rng(4)
        t = rng.random(16)
        want = max(np.sort(t[g.members[0]:g.members[-1] + 1])[g.quorum - 1] for g in plan.groups)
        assert strategy_finish_time(plan, CompletionTrace(t, None)) == want

    def test_wrong_length(self):
        with pytest.raises(InvalidArgumentError):
            strategy_finish_time(plan_uncoded(REF), CompletionTrace(np.ones(7), None))

    @pytest.mark.parametrize("make", [plan_uncoded, lambda s: plan_replication(s, 4), lambda s: plan_coded(s, 2048)])
    def test_monotone(self, make):
        plan = make(REF)
        rng = np.random.default_rng(6)
        for _ in range(200):
            t = rng.random(8)
            base = finish_times(plan, t)[0]
            bumped = t.copy()
            bumped[rng.integers(8)] += rng.random()
            assert finish_times(plan, bumped)[0] >= base


class TestMonteCarlo:
    def test_below_shift_survives(self):
        plan = plan_coded(REF, 2048)
        pts = monte_carlo_tail(plan, TimeModel(), [0.0, 49151.0], 1000)
        assert [p.survival for p in pts] == [1.0, 1.0]

    def test_single_task_analytic(self):
        spec = ProblemSpec(16, 16, 1)
        plan = plan_uncoded(spec)
        tau = task_shift(16)
        n = 100_000
        deadlines = tau * np.array([1.2, 1.5, 2.0, 3.0, 4.0])
        for pt in monte_carlo_tail(plan, TimeModel(), deadlines, n, seed=7):
            want = math.exp(-(pt.deadline / tau - 1))
            sigma = math.sqrt(want * (1 - want) / n)
            assert abs(pt.survival - want) <= 3 * sigma

    def test_parallel_bit_identical(self):
        plan = plan_replication(REF, 4)
        trials = 3 * BLOCK_TRIALS + 17
        serial = sample_finish_times(plan, TimeModel(), trials, seed=11, max_workers=1)
        parallel = sample_finish_times(plan, TimeModel(), trials, seed=11, max_workers=4)
        assert serial.shape == (trials,)
        np.testing.assert_array_equal(serial, parallel)

    def test_seed_changes_result(self):
        plan = plan_uncoded(REF)
        a = sample_finish_times(plan, TimeModel(), 100, seed=1)
        b = sample_finish_times(plan, TimeModel(), 100, seed=2)
        assert not np.array_equal(a, b)

    def test_prefix_stable(self):
        # extra trials only append blocks, earlier blocks are untouched
        plan = plan_uncoded(REF)
        short = sample_finish_times(plan, TimeModel(), BLOCK_TRIALS, seed=3)
        long = sample_finish_times(plan, TimeModel(), 2 * BLOCK_TRIALS, seed=3)
        np.testing.assert_array_equal(long[:BLOCK_TRIALS], short)

    def test_rejects_zero_trials(self):
        with pytest.raises(InvalidArgumentError):
            monte_carlo_tail(plan_uncoded(REF), TimeModel(), [1.0], 0)

    def test_survival_non_increasing(self):
        plan = plan_coded(REF, 2048)
        deadlines = np.linspace(0, 4e5, 81)
        sv = [p.survival for p in monte_carlo_tail(plan, TimeModel(), deadlines, 5000)]
        assert all(b <= a for a, b in zip(sv, sv[1:]))
