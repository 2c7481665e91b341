
import mpmath
import numpy as np
import pytest

from offloadgame import (
    FlowSpec,
    Linear,
    Logarithmic,
    PowerLaw,
    ScenarioSpec,
    follower_best_response,
    follower_equilibrium,
    leader_optimal_price,
    select_ap_sets,
    solve_unbounded_sne,
)
from offloadgame.bounded import bounded_flows, solve_bounded_sne
from offloadgame.oracle import unbounded_response
from offloadgame.scenarios import random_unbounded
from offloadgame.unbounded import coefficients, optimal_price


def scen(costs, u=Linear(1.0)):
    return ScenarioSpec(len(costs), [FlowSpec(u, tuple(costs))])


def ap_term(C, e, x, others):
    tot = x + others
    return np.where(tot > 0, C * x / np.where(tot > 0, tot, 1.0), 0.0) - e * x


class TestFollowerBestResponse:
    def test_interior(self):
        assert follower_best_response(4, 1, 1) == pytest.approx(1.0)
        xs = np.linspace(0, 10, 100_001)
        assert xs[np.argmax(ap_term(4, 1, xs, 1.0))] == pytest.approx(1.0, abs=1e-4)

    def test_cutoff(self):
        assert follower_best_response(1, 2, 1) == 0.0

    def test_boundary(self):
        assert follower_best_response(4, 1, 4) == 0.0

    def test_no_rivals(self):
        assert follower_best_response(4, 1, 0) == 0.0


class TestSelectApSets:
    def test_examples(self):
        assert select_ap_sets(scen([1, 1, 3])) == [[0, 1]]
        assert select_ap_sets(scen([1, 1, 1.5])) == [[0, 1, 2]]
        assert select_ap_sets(scen([2.5, 2.5])) == [[0, 1]]

    def test_order_independent_of_labels(self):
        assert select_ap_sets(scen([3, 1, 1])) == [[1, 2]]

    def test_ties_prefer_lower_index(self):
        # threshold after {0,1} is 2; both cost-1.9 APs enter, then cost 3 stays out
        assert select_ap_sets(scen([1, 1, 1.9, 1.9, 3])) == [[0, 1, 2, 3]]

    def test_threshold_structure_random(self, rng):
        for _ in range(200):
            costs = rng.uniform(0.05, 2.0, int(rng.integers(2, 9)))
            S = select_ap_sets(scen(costs))[0]
            thr = costs[S].sum() / (len(S) - 1)
            assert len(S) >= 2
            assert costs[S].max() < thr
            out = [i for i in range(len(costs)) if i not in S]
            assert all(costs[i] >= thr for i in out)


class TestFollowerEquilibrium:
    def test_examples(self):
        np.testing.assert_allclose(follower_equilibrium(scen([1, 1]), [4]).offloads, [[1, 1]])
        np.testing.assert_allclose(follower_equilibrium(scen([1, 1]), [0]).offloads, [[0, 0]])
        np.testing.assert_allclose(follower_equilibrium(scen([1, 1, 3]), [6]).offloads, [[1.5, 1.5, 0]])

    def test_matches_aggregate_form(self, rng):
        for _ in range(100):
            s = random_unbounded(rng, max_aps=8, max_flows=3)
            C = rng.uniform(0, 5, s.num_flows)
            np.testing.assert_allclose(
                follower_equilibrium(s, C).offloads, unbounded_response(s, C), rtol=1e-9, atol=1e-12
            )

    def test_budget_share_identity(self, rng):
        for _ in range(100):
            s = random_unbounded(rng, max_aps=8)
            C = rng.uniform(0.1, 5, s.num_flows)
            eq = follower_equilibrium(s, C)
            for f, flow in enumerate(s.flows):
                S = eq.ap_sets[f]
                e = np.asarray(flow.costs)[S]
                assert eq.offloads[f].sum() == pytest.approx((len(S) - 1) * C[f] / e.sum(), rel=1e-12)
                assert eq.support(f) == S

    def test_no_profitable_deviation_grid(self, rng):
        for _ in range(30):
            s = random_unbounded(rng)
            eq = solve_unbounded_sne(s)
            r, C = eq.offloads, eq.prices
            worst = 0.0
            for f, flow in enumerate(s.flows):
                xs = np.linspace(0, 4 * max(r.max(), 1e-9), 2000)
                for i in range(s.num_aps):
                    others = r[f].sum() - r[f, i]
                    base = ap_term(C[f], flow.costs[i], r[f, i], others)
                    worst = max(worst, float((ap_term(C[f], flow.costs[i], xs, others) - base).max()))
            assert worst <= 1e-6

    def test_negative_price_rejected(self):
        with pytest.raises(ValueError):
            follower_equilibrium(scen([1, 1]), [-1])


def golden_max(fn, lo, hi, tol=1e-13):
    mpmath.mp.dps = 40
    g = (mpmath.sqrt(5) - 1) / 2
    a, b = mpmath.mpf(lo), mpmath.mpf(hi)
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fn(d)
    return float((a + b) / 2)


def mp_payoff(u, k):
    def val(C):
        x = mpmath.fsum(mpmath.log1p(ki * C) for ki in k)
        if isinstance(u, Linear):
            v = u.weight * x
        elif isinstance(u, PowerLaw):
            v = u.weight * x ** u.exponent
        else:
            v = u.weight * mpmath.log1p(x)
        return v - C

    return val


class TestLeaderPrice:
    def test_closed_forms(self):
        s = ScenarioSpec(2, [FlowSpec(Linear(1), (0.1, 0.1))])
        np.testing.assert_allclose(coefficients((0.1, 0.1), [0, 1]), [2.5, 2.5])
        assert leader_optimal_price(s, 0) == pytest.approx(1.6, rel=1e-9)
        s2 = ScenarioSpec(2, [FlowSpec(Linear(2), (0.1, 0.1))])
        assert leader_optimal_price(s2, 0) == pytest.approx(3.6, rel=1e-9)

    def test_zero_when_marginal_nonpositive(self):
        # k = 0.5 per AP, u'(0) sum k = 0.5 * 1 <= 1
        s = ScenarioSpec(2, [FlowSpec(Linear(0.5), (1.0, 1.0))])
        assert leader_optimal_price(s, 0) == 0.0
        assert solve_unbounded_sne(s).offloads.sum() == 0.0

    def test_power_law_always_participates(self):
        s = ScenarioSpec(2, [FlowSpec(PowerLaw(0.1, 0.5), (5.0, 5.0))])
        assert leader_optimal_price(s, 0) > 0

    @pytest.mark.parametrize("u", [Linear(1.3), PowerLaw(2.0, 0.5), PowerLaw(1.0, 0.8), Logarithmic(4.0)], ids=repr)
    def test_matches_high_precision_golden_section(self, u, rng):
        for _ in range(5):
            costs = rng.uniform(0.05, 1.0, int(rng.integers(2, 5)))
            k = coefficients(costs, select_ap_sets(scen(costs))[0])
            C = optimal_price(u, k)
            if C == 0.0:
                continue
            ref = golden_max(mp_payoff(u, k), 0.0, 4 * C + 1)
            assert C == pytest.approx(ref, abs=1e-8)


class TestSne:
    def test_single_flow(self):
        eq = solve_unbounded_sne(ScenarioSpec(2, [FlowSpec(Linear(1), (0.1, 0.1))]))
        np.testing.assert_allclose(eq.prices, [1.6])
        np.testing.assert_allclose(eq.offloads, [[4, 4]])

    def test_identical_flows_identical_solutions(self):
        fl = FlowSpec(Logarithmic(2.0), (0.2, 0.3, 0.25))
        eq = solve_unbounded_sne(ScenarioSpec(3, [fl, fl]))
        np.testing.assert_array_equal(eq.offloads[0], eq.offloads[1])
        assert eq.prices[0] == eq.prices[1]

    def test_expensive_ap_excluded(self):
        eq = solve_unbounded_sne(ScenarioSpec(3, [FlowSpec(Linear(1), (0.1, 0.1, 10))]))
        np.testing.assert_allclose(eq.offloads, [[4, 4, 0]])
        assert eq.ap_sets == [[0, 1]]

    def test_rejects_bounded(self):
        with pytest.raises(ValueError):
            solve_unbounded_sne(ScenarioSpec(2, [FlowSpec(Linear(1), (0.1, 0.1))], 3.0))

    def test_offloads_proportional_to_price(self, rng):
        for _ in range(20):
            s = random_unbounded(rng)
            eq = solve_unbounded_sne(s)
            np.testing.assert_allclose(eq.offloads, eq.coefficients * eq.prices[:, None], rtol=1e-12)

    def test_agrees_with_bounded_when_capacity_slack(self, rng):
        for _ in range(20):
            R = int(rng.integers(2, 6))
            flows = [
                FlowSpec(u, (float(rng.uniform(0.05, 1.0)),) * R)
                for u in (Linear(float(rng.uniform(0.5, 2))), Logarithmic(float(rng.uniform(1, 4))))
            ]
            ub = solve_unbounded_sne(ScenarioSpec(R, flows))
            B = float(ub.offloads[:, 0].sum()) * 1.5 + 1.0
            trace, eq = solve_bounded_sne(bounded_flows(ScenarioSpec(R, flows, B)), R, B, tol=1e-12)
            np.testing.assert_allclose(trace.final_prices, ub.prices, atol=1e-6)
            np.testing.assert_allclose(eq.rho, ub.offloads[:, 0], atol=1e-6)
