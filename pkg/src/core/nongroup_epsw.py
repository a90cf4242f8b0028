"""Core outcomes under a non-group equal-pay law.

Each firm pays one wage to everyone it hires. With two firms the core is indexed by firm 1's
wage w1 in [0, w1_star]: firm 1 hires [w1, w2), firm 2 hires [w2, 1] and workers below w1 stay
unemployed. Profits in this module are per unit of pooled worker mass.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from src.core.distributions import ProductivityDist, make_step, mixture, pooled
from src.core.errors import DomainError, NotCoreError, ParameterError
from src.core.market import Assignment, HiringPlan, Market, MultiMarket, Outcome
from src.core.numerics import (
    DEFAULT_TOLERANCE,
    INNER_TOLERANCE,
    Bracket,
    Tolerance,
    bisect_many,
    bisect_root,
)
from src.core.wages import constant

logger = logging.getLogger(__name__)

# w1 may exceed w1_star by solver noise before it counts as a deviation
_STAR_SLACK = 1e-9


@dataclass
class UniformWageCore:
    w1: float
    w2: float
    w1_star: float
    profit: float
    unemployed_measure: float
    gap: float
    outcome: Optional[Outcome] = None

    def row(self) -> dict:
        return {
            "w1": self.w1,
            "w2": self.w2,
            "profit": self.profit,
            "unemployment": self.unemployed_measure,
            "gap": self.gap,
        }


@dataclass
class ChainResult:
    wages: List[float]
    eta: float


@dataclass
class MultiFirmCore:
    wages: List[float]
    p: float
    w1_star: float
    p_star: float
    unemployed_measure: float
    profits: List[float] = field(default_factory=list)


@dataclass
class AnythingGoesReport:
    """Two cores of one step market whose gaps straddle the no-law benchmark."""

    eps: float
    beta: float
    market: Market
    core_high: UniformWageCore
    core_low: UniformWageCore
    benchmark_gap: float

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "beta": self.beta,
            "benchmark_gap": self.benchmark_gap,
            "core_high": self.core_high.row(),
            "core_low": self.core_low.row(),
        }


@dataclass
class WageSpreadReport:
    """Two cores of one market, one with a wide and one with a narrow wage spread."""

    eps: float
    market: Market
    core_wide: UniformWageCore
    core_narrow: UniformWageCore
    label: str = "one admissible construction"

    @property
    def spread_wide(self) -> float:
        return self.core_wide.w2 - self.core_wide.w1

    @property
    def spread_narrow(self) -> float:
        return self.core_narrow.w2 - self.core_narrow.w1

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "label": self.label,
            "spread_wide": self.spread_wide,
            "spread_narrow": self.spread_narrow,
            "core_wide": self.core_wide.row(),
            "core_narrow": self.core_narrow.row(),
        }


def pooled_dist(market: Union[Market, MultiMarket]) -> ProductivityDist:
    if isinstance(market, Market):
        return pooled(market)
    return mixture([g.dist for g in market.group_specs], [g.size for g in market.group_specs])


def _interval_profit(dist: ProductivityDist, a: float, b: float) -> float:
    """Profit of hiring [a, b) at the uniform wage a."""
    return float(dist.tail_surplus(a, b))


def _w2_of_w1(dist: ProductivityDist, w1: float, tol: Tolerance) -> float:
    total = _interval_profit(dist, w1, 1.0)
    if total <= 0.0:
        return 1.0
    return bisect_root(
        lambda w: _interval_profit(dist, w1, w) - _interval_profit(dist, w, 1.0), Bracket(w1, 1.0), tol
    )


def w2_of_w1(market: Market, w1: float, tol: Tolerance = INNER_TOLERANCE) -> float:
    """Firm 2's wage that equalises both firms' profits given firm 1's wage."""
    if not 0.0 <= w1 <= 1.0:
        raise DomainError(f"w1 {w1} outside [0, 1]")
    return _w2_of_w1(pooled_dist(market), w1, tol)


def _w1_star(dist: ProductivityDist, tol: Tolerance) -> float:
    def excess(w1: float) -> float:
        profit = _interval_profit(dist, w1, _w2_of_w1(dist, w1, INNER_TOLERANCE))
        return profit - float(dist.cumulative(1, w1))

    return bisect_root(excess, Bracket(0.0, 1.0), tol)


def w1_star(market: Market, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """Largest w1 at which hiring the unemployed [0, w1) at wage 0 does not beat firm 1's profit."""
    result = _w1_star(pooled_dist(market), tol)
    logger.debug(f"w1_star={result:.9g}")
    return result


def _average_wage(dist: ProductivityDist, w1: float, w2: float) -> float:
    mid = float(dist.cdf(w2) - dist.cdf(w1))
    return w1 * mid + w2 * (1.0 - float(dist.cdf(w2)))


def _uniform_outcome(w1: float, w2: float) -> Outcome:
    rows = []
    for group in ("A", "B"):
        rows.append(Assignment(1, group, HiringPlan.on(w1, w2), constant(w1)))
        rows.append(Assignment(2, group, HiringPlan.on(w2, 1.0), constant(w2)))
    return Outcome(tuple(rows))


def _core_at(market: Market, dist: ProductivityDist, w1: float, star: float) -> UniformWageCore:
    if w1 > star + _STAR_SLACK:
        deviation = (
            f"a firm hiring the unemployed [0, {w1:.6g}) at wage 0 earns "
            f"{float(dist.cumulative(1, w1)):.6g}, more than firm 1's profit"
        )
        raise NotCoreError(f"w1={w1:.6g} exceeds w1_star={star:.6g}: {deviation}", deviation)
    w2 = _w2_of_w1(dist, w1, INNER_TOLERANCE)
    gap = _average_wage(market.dist_A, w1, w2) - _average_wage(market.dist_B, w1, w2)
    return UniformWageCore(
        w1=w1,
        w2=w2,
        w1_star=star,
        profit=_interval_profit(dist, w1, w2),
        unemployed_measure=float(dist.cdf(w1)) * (1.0 + market.beta),
        gap=gap,
        outcome=_uniform_outcome(w1, w2),
    )


def nongroup_core(market: Market, w1: float) -> UniformWageCore:
    """The uniform-wage core at firm 1's wage w1."""
    if not 0.0 <= w1 < 1.0:
        raise DomainError(f"w1 {w1} outside [0, 1)")
    dist = pooled_dist(market)
    core = _core_at(market, dist, w1, _w1_star(dist, DEFAULT_TOLERANCE))
    logger.info(
        f"non-group core: w1={core.w1:.6g} w2={core.w2:.6g} profit={core.profit:.6g} "
        f"unemployed={core.unemployed_measure:.6g} gap={core.gap:.6g}"
    )
    return core


def nongroup_sweep(market: Market, points: int) -> List[UniformWageCore]:
    """Cores for w1 evenly spaced on [0, w1_star]."""
    if points < 2:
        raise ParameterError(f"a sweep needs at least two points, got {points}")
    dist = pooled_dist(market)
    star = _w1_star(dist, DEFAULT_TOLERANCE)
    rows = [_core_at(market, dist, float(w1), star) for w1 in np.linspace(0.0, star, points)]
    logger.info(f"non-group sweep: {points} points on [0, {star:.6g}]")
    return rows


def _next_wage(dist: ProductivityDist, a: float, p: float) -> float:
    """sup{w in [a, 1] : profit of [a, w) at wage a <= p}."""
    lo = np.array([a])
    return float(
        bisect_many(lambda w: dist.tail_surplus(lo, w) - p, lo, np.ones(1), INNER_TOLERANCE)[0]
    )


def _chain(dist: ProductivityDist, p: float, w_start: float, steps: int) -> ChainResult:
    wages = []
    w = w_start
    for _ in range(steps):
        w = _next_wage(dist, w, p)
        wages.append(w)
    return ChainResult(wages=wages, eta=_interval_profit(dist, w, 1.0))


def multifirm_chain(mmarket: MultiMarket, p: float, w_start: float = 0.0) -> ChainResult:
    """Wages w_1..w_n built from w_start, each firm's interval profit capped at p.

    eta is the profit left for the top firm; eta(p) = p locates the equal-profit chain.
    """
    if p < 0.0:
        raise ParameterError(f"profit level {p} is negative")
    return _chain(pooled_dist(mmarket), p, w_start, mmarket.n_firms)


def multifirm_eta(mmarket: MultiMarket, p: float) -> float:
    return multifirm_chain(mmarket, p).eta


def _solve_fixed_point(dist: ProductivityDist, w_start: float, steps: int) -> float:
    top = _interval_profit(dist, w_start, 1.0)
    if top <= 0.0:
        return 0.0
    return bisect_root(
        lambda p: _chain(dist, p, w_start, steps).eta - p, Bracket(0.0, top), DEFAULT_TOLERANCE
    )


def multifirm_core(mmarket: MultiMarket, w1: float) -> MultiFirmCore:
    """Equal-profit uniform-wage core of n firms with the lowest wage fixed at w1."""
    if not 0.0 <= w1 < 1.0:
        raise DomainError(f"w1 {w1} outside [0, 1)")
    dist = pooled_dist(mmarket)
    n = mmarket.n_firms

    p_star = _solve_fixed_point(dist, 0.0, n)
    star = _chain(dist, p_star, 0.0, n).wages[0]
    if w1 > star + _STAR_SLACK:
        deviation = f"hiring the unemployed [0, {w1:.6g}) at wage 0 beats the common profit"
        raise NotCoreError(f"w1={w1:.6g} exceeds w1_star={star:.6g}: {deviation}", deviation)

    p = _solve_fixed_point(dist, w1, n - 1)
    wages = [w1] + _chain(dist, p, w1, n - 1).wages
    bounds = wages + [1.0]
    profits = [_interval_profit(dist, a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    core = MultiFirmCore(
        wages=wages,
        p=p,
        w1_star=star,
        p_star=p_star,
        unemployed_measure=float(dist.cdf(w1)),
        profits=profits,
    )
    logger.info(f"multi-firm core: n={n} wages={[round(w, 9) for w in wages]} p={p:.9g} p*={p_star:.9g}")
    return core


def gap_scenario_market(eps: float, beta: Optional[float] = None) -> Market:
    """Step market with A mass tilted up and B mass tilted down by eps."""
    if beta is None:
        beta = 2.0 * (4.0 - 5.0 * eps) / (1.0 - 5.0 * eps)
    dist_A = make_step([0.5], [2.0 * eps, 2.0 * (1.0 - eps)])
    dist_B = make_step([0.5], [2.0 * (1.0 - eps), 2.0 * eps])
    return Market(beta, dist_A, dist_B)


def anything_goes_scenarios(eps: float, beta: Optional[float] = None) -> AnythingGoesReport:
    """A high-gap core (w1 = 1/2) and a low-gap core (w1 = 0) of the same market."""
    if not 0.0 < eps < 0.1:
        raise ParameterError(
            f"eps={eps} outside (0, 1/10); the high-gap core beats the benchmark if and only if eps < 1/10"
        )
    market = gap_scenario_market(eps, beta)
    dist = pooled_dist(market)
    star = _w1_star(dist, DEFAULT_TOLERANCE)
    report = AnythingGoesReport(
        eps=eps,
        beta=market.beta,
        market=market,
        core_high=_core_at(market, dist, 0.5, star),
        core_low=_core_at(market, dist, 0.0, star),
        benchmark_gap=market.mean_A - market.mean_B,
    )
    logger.info(
        f"gap scenario eps={eps}: high={report.core_high.gap:.6g} low={report.core_low.gap:.6g} "
        f"benchmark={report.benchmark_gap:.6g}"
    )
    return report


def spread_scenario_market(eps: float) -> Market:
    """Both groups: mass eps^2/4 spread below 1 - eps/2, the rest flat above it."""
    edge = 1.0 - 0.5 * eps
    low = 0.25 * eps * eps
    dist = make_step([edge], [low / edge, (1.0 - low) / (1.0 - edge)])
    return Market(1.0, dist, dist)


def wage_spread_scenarios(eps: float) -> WageSpreadReport:
    """Cores with spread above 1 - eps (w1 = 0) and below eps (w1 = 1 - eps/2)."""
    if not 0.0 < eps <= 0.125:
        raise ParameterError(f"eps={eps} outside (0, 1/8]")
    market = spread_scenario_market(eps)
    dist = pooled_dist(market)
    star = _w1_star(dist, DEFAULT_TOLERANCE)
    report = WageSpreadReport(
        eps=eps,
        market=market,
        core_wide=_core_at(market, dist, 0.0, star),
        core_narrow=_core_at(market, dist, 1.0 - 0.5 * eps, star),
    )
    logger.info(
        f"spread scenario eps={eps}: wide={report.spread_wide:.6g} narrow={report.spread_narrow:.6g}"
    )
    return report


def unemployment_profit_table(cores: Sequence[UniformWageCore]) -> List[dict]:
    """Sweep rows; the gap column is signed, group A minus group B."""
    table = []
    for c in cores:
        row = c.row()
        row["gap_A_minus_B"] = row.pop("gap")
        table.append(row)
    return table
