import numpy as np
import pytest

from src.core.blocking_oracle import (
    MAX_BINS,
    MIN_BINS,
    discretize,
    find_block,
    oracle_is_core,
    recheck_certificate,
)
from src.core.core_no_epsw import make_bertrand, verify_no_epsw_core
from src.core.distributions import make_step, make_uniform
from src.core.errors import FeasibilityError, InfeasibleDeltaError, ParameterError
from src.core.group_epsw import delta_family, verify_group_core
from src.core.market import (
    Assignment,
    GroupSpec,
    HiringPlan,
    Market,
    MultiMarket,
    Outcome,
    segregated_outcome,
)
from src.core.nongroup_epsw import multifirm_core, nongroup_core, w1_star, w2_of_w1
from src.core.wages import WageFunction, constant, from_knots, identity, shifted
from src.models import BlockKind, Regime


def uniform_wage_outcome(bounds):
    """Firm i hires both groups on [bounds[i-1], bounds[i]) at wage bounds[i-1]."""
    rows = []
    for firm, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:]), start=1):
        for group in ("A", "B"):
            rows.append(Assignment(firm, group, HiringPlan.on(lo, hi), constant(lo)))
    return Outcome(tuple(rows))


def equal_wage_pair():
    rows = []
    for group in ("A", "B"):
        rows.append(Assignment(1, group, HiringPlan.on(0.4, 0.7), constant(0.4)))
        rows.append(Assignment(2, group, HiringPlan.on(0.7, 1.0), constant(0.4)))
    return Outcome(tuple(rows))


class TestDiscretize:
    @pytest.mark.parametrize("bins", [MIN_BINS - 1, MAX_BINS + 1])
    def test_bins_out_of_range(self, uniform2, bins):
        with pytest.raises(ParameterError):
            discretize(uniform2, make_bertrand(uniform2, 0.5), bins)

    def test_masses_scale_with_group_size(self, uniform2, power5_market):
        dm = discretize(uniform2, make_bertrand(uniform2, 0.5), 8)
        np.testing.assert_allclose(dm.mass[0], np.full(8, 0.25))
        np.testing.assert_allclose(dm.mass[1], np.full(8, 0.125))
        dm = discretize(power5_market, make_bertrand(power5_market, 0.5), 8)
        np.testing.assert_allclose(dm.mass[0], np.full(8, 0.5))
        assert dm.mass[1][:4].sum() == pytest.approx(1.0 / 32.0, abs=1e-15)
        assert dm.mass[1].sum() == pytest.approx(1.0)

    def test_cell_sums(self, uniform2):
        dm = discretize(uniform2, make_bertrand(uniform2, 0.5), 8)
        f1 = dm.firm_index(1)
        assert dm.hired_mass[f1, 0].sum() == pytest.approx(1.0)
        np.testing.assert_allclose(dm.hired_value[f1], dm.wage_bill[f1], atol=1e-15)
        assert dm.unemployed_mass.sum() == pytest.approx(0.0, abs=1e-15)

    def test_infeasible_outcome(self, uniform2):
        outcome = Outcome(
            (
                Assignment(1, "A", HiringPlan.full(), identity()),
                Assignment(2, "A", HiringPlan.full(), identity()),
            )
        )
        with pytest.raises(FeasibilityError):
            discretize(uniform2, outcome, 16)


class TestCores:
    def test_bertrand(self, uniform2):
        verdict = oracle_is_core(uniform2, make_bertrand(uniform2, 0.5), Regime.NO_EPSW)
        assert verdict.core_at_resolution
        assert verdict.certificate is None
        assert verdict.to_dict()["regime"] == "none"

    def test_completed_group_core(self, power5_market, half_wage, power5_core):
        outcome = segregated_outcome(power5_core.w1, half_wage)
        assert oracle_is_core(power5_market, outcome, Regime.GROUP, bins=64).core_at_resolution

    def test_supportable_delta_member(self, uniform2):
        member = delta_family(uniform2, 0.8)
        assert oracle_is_core(uniform2, member.outcome, Regime.GROUP).core_at_resolution

    def test_uniform_wage_core(self, uniform2):
        outcome = uniform_wage_outcome([0.2, 0.6, 1.0])
        assert oracle_is_core(uniform2, outcome, Regime.NONGROUP).core_at_resolution

    def test_multifirm_ladder(self):
        mm = MultiMarket(3, (GroupSpec("A", 0.5, make_uniform()), GroupSpec("B", 0.5, make_uniform())))
        core = multifirm_core(mm, 0.0)
        outcome = uniform_wage_outcome(core.wages + [1.0])
        assert oracle_is_core(mm, outcome, Regime.NONGROUP).core_at_resolution


class TestBlocks:
    def test_equal_wages_are_blocked(self, uniform2):
        verdict = oracle_is_core(uniform2, equal_wage_pair(), Regime.NONGROUP)
        assert not verdict.core_at_resolution
        assert verdict.certificate.profit_gain > 0.1

    def test_high_w1_is_blocked_by_hiring_the_unemployed(self, uniform2):
        outcome = uniform_wage_outcome([0.5, 0.75, 1.0])
        cert = oracle_is_core(uniform2, outcome, Regime.NONGROUP).certificate
        assert cert.firm == 1
        assert cert.kind is BlockKind.UNIFORM_WAGE
        assert cert.params["wage"] == 0.0
        assert cert.profit_gain == pytest.approx(0.28125, abs=1e-12)
        assert recheck_certificate(uniform2, outcome, cert) == pytest.approx(0.28125, abs=1e-12)

    def test_unsupportable_delta_member(self, uniform2):
        member = delta_family(uniform2, 0.5)
        cert = oracle_is_core(uniform2, member.outcome, Regime.GROUP).certificate
        assert cert is not None
        assert cert.kind is BlockKind.DESEGREGATE
        assert recheck_certificate(uniform2, member.outcome, cert) > 0.0

    def test_unemployment_without_a_law(self, uniform2):
        outcome = Outcome(
            (
                Assignment(1, "A", HiringPlan.on(0.2, 0.5), identity()),
                Assignment(2, "A", HiringPlan.on(0.5, 1.0), identity()),
                Assignment(2, "B", HiringPlan.full(), identity()),
            )
        )
        cert = oracle_is_core(uniform2, outcome, Regime.NO_EPSW).certificate
        assert cert is not None
        assert cert.profit_gain == pytest.approx(0.04, abs=1e-9)
        assert recheck_certificate(uniform2, outcome, cert) > 0.0

    def test_underpaid_rival_is_poached(self, uniform2):
        rows = []
        for group in ("A", "B"):
            rows.append(Assignment(1, group, HiringPlan.on(0.0, 0.5), identity()))
            rows.append(Assignment(2, group, HiringPlan.on(0.5, 1.0), shifted(0.1)))
        cert = oracle_is_core(uniform2, Outcome(tuple(rows)), Regime.NO_EPSW).certificate
        assert cert is not None
        assert cert.firm == 1
        assert cert.profit_gain == pytest.approx(0.15, abs=1e-3)

    def test_block_survives_refinement(self, uniform2):
        outcome = equal_wage_pair()
        assert not oracle_is_core(uniform2, outcome, Regime.NONGROUP, bins=32).core_at_resolution
        assert not oracle_is_core(uniform2, outcome, Regime.NONGROUP, bins=64).core_at_resolution

    def test_tolerance_suppresses_small_gains(self, uniform2):
        dm = discretize(uniform2, equal_wage_pair(), 16)
        assert find_block(dm, Regime.NONGROUP, econ_tol=10.0) is None


def test_agrees_with_delta_family_verdicts(uniform2):
    rng = np.random.default_rng(2024)
    checked = 0
    for delta in rng.uniform(0.3, 1.0, 12):
        member = delta_family(uniform2, float(delta))
        if abs(member.delta - member.delta_prime) <= 10.0 / 64.0:
            continue
        verdict = oracle_is_core(uniform2, member.outcome, Regime.GROUP, bins=64)
        assert verdict.core_at_resolution == member.supportable, delta
        checked += 1
    assert checked > 0


def test_biased_firm_values_b_hires_less(uniform2):
    # firm 1 pays B-workers their productivity; with a bias it loses money on every B-hire
    outcome = Outcome(
        (
            Assignment(1, "A", HiringPlan.full(), identity()),
            Assignment(1, "B", HiringPlan.full(), identity()),
        )
    )
    assert oracle_is_core(uniform2, outcome, Regime.NO_EPSW).core_at_resolution
    cert = oracle_is_core(uniform2, outcome, Regime.NO_EPSW, bias=0.5).certificate
    assert cert.firm == 1
    assert cert.profit_gain == pytest.approx(0.5, abs=1e-12)
    assert recheck_certificate(uniform2, outcome, cert, bias=0.5) == pytest.approx(0.5, abs=1e-12)


# analytic slack above this is resolved by a 64-cell search
BAND = 10.0 / 64.0
NO_LAW_PERTURBATIONS = ("underpay", "overpay", "unemployment")


def perturbed_bertrand(rng, kind):
    """A competitive outcome broken by 0.05 on an interval longer than BAND; returns (outcome, length)."""
    split = float(rng.uniform(0.3, 0.7))
    wage = identity()
    firm1 = HiringPlan.on(0.0, split)
    length = 1.0 - split
    if kind == "underpay":
        lo, hi = (0.0, split) if split >= 0.5 else (split, 1.0)
        length = float(rng.uniform(0.16, 0.25))
        a = float(rng.uniform(lo + 0.02, hi - length - 0.02))
        b = a + length
        wage = from_knots([(0.0, 0.0), (a, a), (a + 0.05, a), (b, b - 0.05), (b, b), (1.0, 1.0)])
    elif kind == "overpay":
        a = float(rng.uniform(0.1, 0.75))
        length = 0.95 - a
        wage = from_knots([(0.0, 0.0), (a, a), (a, a + 0.05), (0.95, 1.0), (1.0, 1.0)])
    else:
        length = float(rng.uniform(0.16, 0.25))
        firm1 = HiringPlan.on(length, split)
    rows = []
    for group in ("A", "B"):
        rows.append(Assignment(1, group, firm1, wage))
        rows.append(Assignment(2, group, HiringPlan.on(split, 1.0), wage))
    return Outcome(tuple(rows)), length


def delta_instance(rng):
    """A delta-family member on a uniform market, at least 0.08 away from the supportability edge."""
    beta = float(rng.uniform(1.2, 4.0))
    market = Market(beta, make_uniform(), make_uniform())
    lowest = 1.0 - 1.0 / np.sqrt(beta) + 1e-3
    while True:
        try:
            member = delta_family(market, float(rng.uniform(lowest, 1.0)))
        except InfeasibleDeltaError:
            continue
        if abs(member.delta - member.delta_prime) >= 0.08:
            return market, member


def uniform_wage_instance(rng, market):
    star = w1_star(market)
    while True:
        w1 = float(rng.uniform(0.0, min(0.9, star + 0.25)))
        if abs(w1 - star) >= 0.01:
            break
    return uniform_wage_outcome([w1, w2_of_w1(market, w1), 1.0]), w1 <= star, abs(w1 - star)


def test_analytic_and_oracle_verdicts_agree(random_market):
    rng = np.random.default_rng(200)
    rows = []

    def record(market, outcome, regime, analytic, slack):
        found = oracle_is_core(market, outcome, regime, bins=64).core_at_resolution
        rows.append((analytic, found, slack))

    for _ in range(50):
        market = random_market(rng)
        outcome = make_bertrand(market, float(rng.uniform(0.1, 0.9)))
        record(market, outcome, Regime.NO_EPSW, verify_no_epsw_core(market, outcome).is_core, np.inf)
    for i in range(40):
        market = random_market(rng)
        outcome, length = perturbed_bertrand(rng, NO_LAW_PERTURBATIONS[i % 3])
        record(market, outcome, Regime.NO_EPSW, verify_no_epsw_core(market, outcome).is_core, length)
    for _ in range(50):
        market = random_market(rng)
        outcome, analytic, slack = uniform_wage_instance(rng, market)
        record(market, outcome, Regime.NONGROUP, analytic, slack)
    for _ in range(60):
        market, member = delta_instance(rng)
        w1, w2 = member.outcome.wage(1, "A"), member.outcome.wage(2, "B")
        report = verify_group_core(market, w1, w2, grid_size=513)
        assert report.is_core == member.supportable, (market.beta, member.delta)
        record(market, member.outcome, Regime.GROUP, report.is_core, abs(member.delta - member.delta_prime))

    assert len(rows) == 200
    assert any(not analytic for analytic, _, _ in rows)
    disagreements = [slack for analytic, found, slack in rows if analytic != found]
    assert all(slack <= BAND for slack in disagreements), disagreements
    assert len(disagreements) <= 4


def test_group_verdicts_match_the_oracle():
    rng = np.random.default_rng(50)
    outcomes = {True: 0, False: 0}
    for i in range(50):
        market, member = delta_instance(rng)
        w1, w2 = member.outcome.wage(1, "A"), member.outcome.wage(2, "B")
        if i % 2 and member.supportable:
            size = float(rng.uniform(0.05, 0.1))
            sign = float(rng.choice([-1.0, 1.0]))
            w1 = WageFunction.from_knots(
                [(v, min(1.0, max(0.0, w + sign * size))) for v, w in w1.knots]
            )
        analytic = verify_group_core(market, w1, w2, grid_size=513).is_core
        verdict = oracle_is_core(market, segregated_outcome(w1, w2), Regime.GROUP, bins=64)
        assert verdict.core_at_resolution == analytic, (market.beta, member.delta, i)
        outcomes[analytic] += 1
    assert outcomes[True] > 0 and outcomes[False] > 0


def test_uniform_wage_search_on_random_markets(random_market):
    rng = np.random.default_rng(30)
    for _ in range(30):
        market = random_market(rng)
        star = w1_star(market)
        core = nongroup_core(market, float(rng.uniform(0.0, star)))
        assert oracle_is_core(market, core.outcome, Regime.NONGROUP).core_at_resolution
        w1 = min(star + float(rng.uniform(0.02, 0.2)), 0.95)
        outcome = uniform_wage_outcome([w1, w2_of_w1(market, w1), 1.0])
        cert = oracle_is_core(market, outcome, Regime.NONGROUP).certificate
        assert cert is not None
        assert cert.kind is BlockKind.UNIFORM_WAGE


@pytest.mark.parametrize("kind", NO_LAW_PERTURBATIONS)
def test_no_law_perturbations_are_blocked(random_market, kind):
    rng = np.random.default_rng(len(kind))
    for _ in range(8):
        market = random_market(rng)
        outcome, _ = perturbed_bertrand(rng, kind)
        assert not verify_no_epsw_core(market, outcome).is_core
        verdict = oracle_is_core(market, outcome, Regime.NO_EPSW, bins=64)
        assert not verdict.core_at_resolution
        assert verdict.certificate.profit_gain > 1e-4
