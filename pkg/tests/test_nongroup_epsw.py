import numpy as np
import pytest

from src.core.distributions import make_uniform
from src.core.errors import DomainError, NotCoreError, ParameterError
from src.core.market import GroupSpec, MultiMarket, check_feasibility
from src.core.nongroup_epsw import (
    anything_goes_scenarios,
    gap_scenario_market,
    multifirm_chain,
    multifirm_core,
    multifirm_eta,
    nongroup_core,
    nongroup_sweep,
    pooled_dist,
    unemployment_profit_table,
    w1_star,
    w2_of_w1,
    wage_spread_scenarios,
)


def uniform_mmarket(n_firms):
    return MultiMarket(
        n_firms, (GroupSpec("A", 0.5, make_uniform()), GroupSpec("B", 0.5, make_uniform()))
    )


class TestTwoFirms:
    def test_w1_star(self, uniform2):
        assert w1_star(uniform2) == pytest.approx(1.0 / 3.0, abs=1e-9)

    @pytest.mark.parametrize("w1", [0.0, 0.1, 0.2, 0.3])
    def test_w2_is_midpoint_for_uniform(self, uniform2, w1):
        assert w2_of_w1(uniform2, w1) == pytest.approx((1.0 + w1) / 2.0, abs=1e-9)

    def test_core_at_zero(self, uniform2):
        core = nongroup_core(uniform2, 0.0)
        assert core.w2 == pytest.approx(0.5, abs=1e-9)
        assert core.profit == pytest.approx(0.125, abs=1e-9)
        assert core.unemployed_measure == 0.0

    def test_core_with_unemployment(self, uniform2):
        core = nongroup_core(uniform2, 0.2)
        assert core.w2 == pytest.approx(0.6, abs=1e-9)
        assert core.profit == pytest.approx(0.08, abs=1e-9)
        assert core.unemployed_measure == pytest.approx(0.6, abs=1e-12)
        assert core.gap == pytest.approx(0.0, abs=1e-12)
        check_feasibility(uniform2, core.outcome)

    def test_wage_above_star(self, uniform2):
        with pytest.raises(NotCoreError) as info:
            nongroup_core(uniform2, 0.34)
        assert "unemployed" in info.value.deviation

    def test_wage_out_of_range(self, uniform2):
        with pytest.raises(DomainError):
            nongroup_core(uniform2, 1.0)

    def test_sweep_trades_profit_for_unemployment(self, uniform2):
        rows = nongroup_sweep(uniform2, 20)
        profits = np.array([r.profit for r in rows])
        unemployment = np.array([r.unemployed_measure for r in rows])
        assert rows[-1].w1 == pytest.approx(1.0 / 3.0, abs=1e-9)
        assert np.all(np.diff(profits) < 0.0)
        assert np.all(np.diff(unemployment) > 0.0)
        table = unemployment_profit_table(rows)
        assert list(table[0]) == ["w1", "w2", "profit", "unemployment", "gap_A_minus_B"]

    def test_sweep_needs_two_points(self, uniform2):
        with pytest.raises(ParameterError):
            nongroup_sweep(uniform2, 1)


class TestManyFirms:
    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_equal_profit_level(self, n):
        p_star = 1.0 / (2.0 * (n + 1) ** 2)
        core = multifirm_core(uniform_mmarket(n), 0.0)
        assert core.p_star == pytest.approx(p_star, abs=1e-8)
        assert core.w1_star == pytest.approx(1.0 / (n + 1), abs=1e-6)

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_chain_at_fixed_point(self, n):
        p_star = 1.0 / (2.0 * (n + 1) ** 2)
        chain = multifirm_chain(uniform_mmarket(n), p_star)
        np.testing.assert_allclose(chain.wages, [i / (n + 1) for i in range(1, n + 1)], atol=1e-8)
        assert chain.eta == pytest.approx(p_star, abs=1e-9)
        assert multifirm_eta(uniform_mmarket(n), p_star) == pytest.approx(chain.eta)

    def test_two_firm_ladder_from_zero(self):
        core = multifirm_core(uniform_mmarket(2), 0.0)
        np.testing.assert_allclose(core.wages, [0.0, 0.5], atol=1e-8)
        assert core.p == pytest.approx(0.125, abs=1e-8)
        np.testing.assert_allclose(core.profits, [0.125, 0.125], atol=1e-8)

    def test_ladder_above_star(self):
        with pytest.raises(NotCoreError):
            multifirm_core(uniform_mmarket(3), 0.3)

    def test_negative_profit_level(self):
        with pytest.raises(ParameterError):
            multifirm_chain(uniform_mmarket(2), -0.1)

    def test_two_firm_chain_reduces_to_w2_of_w1(self, random_market):
        rng = np.random.default_rng(20)
        for _ in range(20):
            market = random_market(rng)
            share = market.beta / (1.0 + market.beta)
            mm = MultiMarket(
                2, (GroupSpec("A", share, market.dist_A), GroupSpec("B", 1.0 - share, market.dist_B))
            )
            w1 = float(rng.uniform(0.0, 0.9 * w1_star(market)))
            w2 = w2_of_w1(market, w1)
            p = float(pooled_dist(market).tail_surplus(w1, w2))
            assert multifirm_chain(mm, p, w1).wages[0] == pytest.approx(w2, abs=1e-8)
            core = multifirm_core(mm, w1)
            assert core.wages[1] == pytest.approx(w2, abs=1e-7)
            assert core.profits[0] == pytest.approx(core.profits[1], abs=1e-8)


class TestConstructedScenarios:
    def test_gap_scenario(self):
        report = anything_goes_scenarios(0.05)
        assert report.beta == pytest.approx(10.0)
        assert report.benchmark_gap == pytest.approx(0.45, abs=1e-12)
        assert report.core_high.gap == pytest.approx(0.5625, abs=1e-9)
        assert report.core_low.gap < 0.45

    def test_gap_scenario_means(self):
        market = gap_scenario_market(0.05)
        assert market.mean_A == pytest.approx(0.725)

    def test_gap_scenario_range(self):
        with pytest.raises(ParameterError):
            anything_goes_scenarios(0.1)

    def test_spread_scenario(self):
        report = wage_spread_scenarios(0.1)
        assert report.spread_wide > 0.9
        assert report.spread_narrow < 0.1
        assert report.core_narrow.w1 == pytest.approx(0.95)
        assert report.core_narrow.w2 == pytest.approx(0.975, abs=1e-9)

    def test_spread_scenario_range(self):
        with pytest.raises(ParameterError):
            wage_spread_scenarios(0.2)
