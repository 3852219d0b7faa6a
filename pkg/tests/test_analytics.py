import math

import numpy as np
import pytest

from codedconv.analytics import (
    alpha_threshold,
    best_s,
    complexity_ratio,
    complexity_terms,
    epsilon,
    epsilon_replication,
    fit_tail_slope,
    heuristic_E,
    heuristic_E_prime,
    theorem5_ratio,
)
from codedconv.conv import CostModel
from codedconv.errors import InvalidArgumentError
from codedconv.planner import ProblemSpec, coded_piece_lengths, plan_coded
from codedconv.straggler import TailPoint, TimeModel, task_shift

REF = ProblemSpec(4096, 2048, 8)


def sweep_specs():
    """Valid specs with a coded point at 2*sqrt(n1*n2/p)."""
    out = []
    for e1 in range(8, 22, 2):
        for d in (0, 2):
            for p in (4, 16, 64):
                spec = ProblemSpec(2 ** e1, 2 ** (e1 - d), p)
                s0 = spec.uncoded_len
                if spec.satisfies_assumption and 2 * s0 <= spec.min_len:
                    out.append(spec)
    return out


class TestEpsilon:
    def test_uncoded_point(self):
        rep = epsilon(REF, 1024)
        assert rep.epsilon == pytest.approx(-1 / 22528, rel=1e-14)
        assert rep.worst_k == 8 and not rep.is_upper_bound

    def test_coded(self):
        rep = epsilon(REF, 2048)
        assert rep.epsilon == pytest.approx(-7 / 49152, rel=1e-14)
        assert rep.worst_k == 2 and rep.is_upper_bound

    def test_replication(self):
        rep = epsilon_replication(REF, 4)
        assert rep.epsilon == pytest.approx(-4 / 49152, rel=1e-14)
        assert rep.worst_k == 5 and not rep.is_upper_bound

    def test_replication_r1(self):
        assert epsilon_replication(REF, 1).epsilon == epsilon(REF, 1024).epsilon

    def test_ordering(self):
        c, r, u = epsilon(REF, 2048), epsilon_replication(REF, 4), epsilon(REF, 1024)
        assert abs(c.epsilon) > abs(r.epsilon) > abs(u.epsilon)

    def test_alpha_two(self):
        m = TimeModel(mu=0.5, alpha=2.0)
        assert epsilon(REF, 2048, m).epsilon == pytest.approx(-7 * 0.25 / 49152 ** 2, rel=1e-14)

    @pytest.mark.parametrize("s", [1000, 4096, 1])
    def test_out_of_range(self, s):
        with pytest.raises(InvalidArgumentError):
            epsilon(REF, s)

    @pytest.mark.parametrize("spec", [REF, ProblemSpec(64, 32, 8), ProblemSpec(2 ** 14, 2 ** 12, 64)])
    @pytest.mark.parametrize("model", [TimeModel(), TimeModel(1.7, 0.6, CostModel(2.0, "e"))])
    def test_planner_identity(self, spec, model):
        for s in coded_piece_lengths(spec, include_uncoded=True):
            k = plan_coded(spec, s).worst_k
            want = -(spec.p - k + 1) * model.mu ** model.alpha / task_shift(s, model) ** model.alpha
            assert epsilon(spec, s, model).epsilon == pytest.approx(want, rel=1e-12)


class TestCodingGain:
    def test_hand_value(self):
        r = theorem5_ratio(ProblemSpec(2 ** 20, 2 ** 20, 16))
        assert r.ratio == pytest.approx(7 * 19 / 40, rel=1e-12)
        assert r.lower_bound == pytest.approx(1.5)

    def test_sweep(self):
        specs = sweep_specs()
        assert len(specs) >= 20
        for spec in specs:
            r = theorem5_ratio(spec)
            assert r.ratio > r.lower_bound

    def test_sqrt2_scaling(self):
        a = theorem5_ratio(ProblemSpec(2 ** 20, 2 ** 20, 16)).ratio
        b = theorem5_ratio(ProblemSpec(2 ** 20, 2 ** 20, 32)).ratio
        assert b / a == pytest.approx(math.sqrt(2), rel=0.10)

    def test_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            theorem5_ratio(ProblemSpec(4, 2, 4))


class TestHeuristic:
    def test_exp_is_abs_epsilon(self):
        m = TimeModel(mu=2.5, alpha=1.3, cost=CostModel(0.4))
        for spec in (REF, ProblemSpec(2 ** 16, 2 ** 14, 16)):
            for s in np.linspace(spec.uncoded_len, spec.min_len, 25):
                assert math.exp(heuristic_E(spec, s, m)) / abs(epsilon(spec, s, m).epsilon) == pytest.approx(
                    1.0, abs=1e-10
                )

    @pytest.mark.parametrize("base", ["2", "e"])
    def test_derivative_finite_difference(self, base):
        spec = ProblemSpec(2 ** 14, 2 ** 12, 16)
        m = TimeModel(1.0, 1.5, CostModel(1.0, base))
        rng = np.random.default_rng(0)
        lo, hi = spec.uncoded_len, spec.min_len
        for s in rng.uniform(lo * 1.01, hi * 0.99, 50):
            h = 1e-5 * s
            fd = (heuristic_E(spec, s + h, m) - heuristic_E(spec, s - h, m)) / (2 * h)
            assert heuristic_E_prime(spec, s, m) == pytest.approx(fd, rel=1e-6)

    def test_coding_wins_e_sweep(self):
        n = 2 ** 10
        spec = ProblemSpec(4 * n, n, 16)
        assert heuristic_E(spec, 4 * n / 4) > heuristic_E(spec, 2 * n / 4)


class TestAlphaThreshold:
    spec = ProblemSpec(4 * 2 ** 10, 2 ** 10, 16)

    def test_value(self):
        assert alpha_threshold(self.spec) == pytest.approx(16 / (1 + 1 / math.log(1024)))

    @pytest.mark.parametrize("spec", [ProblemSpec(4 * 2 ** 10, 2 ** 10, 16), REF, ProblemSpec(2 ** 20, 2 ** 20, 64)])
    def test_sign_flip(self, spec):
        th = alpha_threshold(spec)
        s0 = spec.uncoded_len
        assert heuristic_E_prime(spec, s0, TimeModel(alpha=0.9 * th)) > 0
        assert heuristic_E_prime(spec, s0, TimeModel(alpha=1.1 * th)) < 0
        assert heuristic_E_prime(spec, s0, TimeModel(alpha=th)) == pytest.approx(0.0, abs=1e-15)

    def test_exponential_below_threshold(self):
        for spec in sweep_specs():
            assert alpha_threshold(spec) > 1.0


class TestBestS:
    def test_reference(self):
        assert best_s(REF) == 2048

    def test_small(self):
        assert best_s(ProblemSpec(64, 32, 8)) == 32
        assert abs(epsilon(ProblemSpec(64, 32, 8), 32).epsilon) > abs(epsilon(ProblemSpec(64, 32, 8), 16).epsilon)

    def test_argmax(self):
        spec = ProblemSpec(2 ** 16, 2 ** 16, 64)
        best = abs(epsilon(spec, best_s(spec)).epsilon)
        for s in coded_piece_lengths(spec, include_uncoded=True):
            assert best >= abs(epsilon(spec, s).epsilon)

    def test_empty(self):
        with pytest.raises(InvalidArgumentError, match="divisib|s \\| n1"):
            best_s(ProblemSpec(16, 16, 1))


class TestComplexity:
    def test_terms_by_hand(self):
        t = complexity_terms(REF, 2048)
        # n=8, k=2, one block pair count n1*n2/s^2 = 2
        assert t.encode == 2048 * 8 * 9
        assert t.decode == 2 * 2048 * 2 * 1
        assert t.add == 2 * 2048 * 2
        assert t.per_processor == 49152
        assert t.ratio == pytest.approx((t.encode + t.decode + t.add) / 49152)

    def test_decreasing_sequence(self):
        vals = [complexity_ratio(ProblemSpec(2 ** m, 2 ** m, 4), 2 ** m) for m in range(10, 31, 4)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("spec", [REF, ProblemSpec(2 ** 16, 2 ** 14, 16), ProblemSpec(2 ** 12, 2 ** 12, 64)])
    def test_bounds(self, spec):
        p = spec.p
        for s in coded_piece_lengths(spec):
            t = complexity_terms(spec, s)
            assert t.encode <= s * p * math.log2(p) ** 2
            assert t.add <= 2 * s * p

    def test_denominator_superlinear(self):
        spec = ProblemSpec(2 ** 14, 2 ** 14, 16)
        a = complexity_terms(spec, 2 ** 13).per_processor
        b = complexity_terms(spec, 2 ** 14).per_processor
        assert b > 2 * a


class TestFit:
    def test_exact_exponential(self):
        c = 3e-5
        pts = [(t, math.exp(-c * t)) for t in np.linspace(1e4, 4e5, 40)]
        assert fit_tail_slope(pts) == pytest.approx(-c, rel=1e-6)

    def test_weibull_alpha(self):
        c = 2e-9
        pts = [TailPoint(t, 10 ** 9, round(1e9 * math.exp(-c * t * t))) for t in np.linspace(1e3, 3e4, 30)]
        assert fit_tail_slope(pts, alpha=2.0) == pytest.approx(-c, rel=1e-3)

    def test_excludes_zero_and_one(self):
        pts = [(0.0, 1.0), (1.0, 1.0)] + [(t, math.exp(-t)) for t in range(2, 12)] + [(20.0, 0.0)]
        assert fit_tail_slope(pts) == pytest.approx(-1.0, rel=1e-9)

    def test_min_survival(self):
        # the last two points are too rare to trust and would bend the fit
        pts = [(t, math.exp(-t)) for t in range(1, 9)] + [(9.0, 1e-6), (10.0, 1e-7)]
        assert fit_tail_slope(pts, min_survival=1e-4) == pytest.approx(-1.0, rel=1e-9)
        assert fit_tail_slope(pts) != pytest.approx(-1.0, rel=1e-3)

    def test_too_few(self):
        with pytest.raises(InvalidArgumentError):
            fit_tail_slope([(1.0, 0.5), (2.0, 0.25), (3.0, 0.0), (4.0, 1.0)])
