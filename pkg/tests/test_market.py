import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.distributions import make_power, make_uniform
from src.core.errors import FeasibilityError, ParameterError, StructureError
from src.core.market import (
    Assignment,
    GroupSpec,
    HiringPlan,
    Market,
    MultiMarket,
    Outcome,
    accounting,
    average_wage,
    check_feasibility,
    employment,
    exact_surplus,
    gap_identity_residual,
    payoff,
    profit,
    segregated_outcome,
    wage_bill,
    wage_surplus,
)
from src.core.wages import cap, from_knots, identity, linear, threshold, zero


class TestMarkets:
    def test_beta_below_one(self, uniform):
        with pytest.raises(ParameterError):
            Market(0.5, uniform, uniform)
        with pytest.raises(ParameterError):
            Market(math.nan, uniform, uniform)

    def test_groups_carry_weights(self, uniform2):
        assert uniform2.groups["A"][0] == 2.0
        assert uniform2.groups["B"][0] == 1.0

    def test_multimarket_validation(self, uniform):
        with pytest.raises(ParameterError):
            MultiMarket(1, (GroupSpec("A", 1.0, uniform),))
        with pytest.raises(ParameterError):
            MultiMarket(2, (GroupSpec("A", 0.5, uniform), GroupSpec("B", 0.4, uniform)))
        with pytest.raises(StructureError):
            MultiMarket(2, (GroupSpec("A", 0.5, uniform), GroupSpec("A", 0.5, uniform)))


class TestHiringPlans:
    def test_overlap(self):
        with pytest.raises(StructureError):
            HiringPlan(((0.0, 0.6, 1.0), (0.5, 1.0, 1.0)))

    def test_share_out_of_range(self):
        with pytest.raises(StructureError):
            HiringPlan(((0.0, 1.0, 1.5),))

    def test_share_at(self):
        plan = HiringPlan.on(0.2, 0.5, 0.5)
        assert plan.share_at(0.3) == 0.5
        assert plan.share_at(0.5) == 0.0
        assert HiringPlan.on(0.4, 0.4).intervals == ()


class TestFeasibility:
    def test_over_hiring(self, uniform2):
        outcome = Outcome(
            (
                Assignment(1, "A", HiringPlan.full(), identity()),
                Assignment(2, "A", HiringPlan.on(0.3, 0.6), identity()),
            )
        )
        with pytest.raises(FeasibilityError) as info:
            check_feasibility(uniform2, outcome)
        assert info.value.group == "A"
        assert info.value.interval == (pytest.approx(0.3), pytest.approx(0.6))

    def test_unknown_group(self, uniform2):
        outcome = Outcome((Assignment(1, "C", HiringPlan.full(), identity()),))
        with pytest.raises(StructureError):
            check_feasibility(uniform2, outcome)


class TestAccounting:
    def test_profits_at_wage_zero(self, uniform2):
        outcome = segregated_outcome(zero(), zero())
        assert profit(uniform2, outcome, 1) == pytest.approx(1.0)
        assert profit(uniform2, outcome, 2) == pytest.approx(0.5)

    def test_firm_hiring_both_groups_at_zero(self, uniform):
        market = Market(1.0, uniform, uniform)
        outcome = Outcome(
            (
                Assignment(1, "A", HiringPlan.on(0.0, 0.5), zero()),
                Assignment(1, "B", HiringPlan.on(0.0, 0.5), zero()),
            )
        )
        assert profit(market, outcome, 1) == pytest.approx(0.25)

    def test_unemployed_count_at_zero_wage(self, uniform2):
        outcome = Outcome((Assignment(1, "A", HiringPlan.on(0.5, 1.0), identity()),))
        assert average_wage(uniform2, outcome, "A") == pytest.approx(0.375)
        assert employment(uniform2, outcome, "A") == pytest.approx(1.0)

    def test_wage_bill(self, power5):
        # int (v/2) 5 v^4 dv
        assert wage_bill(power5, linear(0.5)) == pytest.approx(5.0 / 12.0, abs=1e-14)

    def test_gap_identity_under_equal_profit(self, uniform2):
        # cap 0.8 for A, threshold sqrt(2) * 0.2 for B: both firms earn 0.04
        outcome = segregated_outcome(cap(0.8), threshold(math.sqrt(2.0) * 0.2))
        report = accounting(uniform2, outcome)
        assert report.profit_1 == pytest.approx(report.profit_2, abs=1e-12)
        assert gap_identity_residual(uniform2, report) == pytest.approx(0.0, abs=1e-12)
        assert report.gap == pytest.approx(0.02, abs=1e-12)

    def test_biased_payoff(self, uniform2):
        outcome = Outcome((Assignment(1, "B", HiringPlan.on(0.0, 0.5), zero()),))
        assert payoff(uniform2, outcome, 1, bias=0.5) == pytest.approx(0.125 - 0.25)
        assert accounting(uniform2, outcome, bias=0.5).payoff_1 == pytest.approx(-0.125)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
    def test_surplus_paths_agree(self, delta_prime, lo):
        dist = make_power(5)
        w = threshold(delta_prime)
        assert exact_surplus(dist, w, lo, 1.0) == pytest.approx(
            wage_surplus(dist, w, lo, 1.0), abs=1e-12
        )


    def test_surplus_on_a_fine_wage(self):
        dist = make_power(5)
        vs = [i / 2048 for i in range(2049)]
        w = from_knots([(v, 0.5 * v * v) for v in vs])

        def antiderivative(v):
            return 5.0 * (v**6 / 6.0 - v**7 / 14.0)

        expected = antiderivative(0.9) - antiderivative(0.1)
        assert exact_surplus(dist, w, 0.1, 0.9) == pytest.approx(expected, abs=1e-7)
        assert exact_surplus(dist, w, 0.1, 0.9) == pytest.approx(wage_surplus(dist, w, 0.1, 0.9), abs=1e-12)


class TestSerialisation:
    def test_round_trip(self):
        outcome = segregated_outcome(cap(0.4), threshold(0.3))
        again = Outcome.from_dict(outcome.to_dict())
        assert again.wage(2, "B").knots == outcome.wage(2, "B").knots
        assert again.firms == [1, 2]

    def test_malformed(self):
        with pytest.raises(StructureError):
            Outcome.from_dict({"assignments": [{"firm": 1}]})
        with pytest.raises(StructureError):
            Outcome.from_dict({})
