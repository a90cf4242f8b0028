"""Core outcomes without an equal-pay law: full employment at wage = productivity."""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from src.core.errors import DomainError
from src.core.market import (
    AnyMarket,
    Assignment,
    HiringPlan,
    Market,
    Outcome,
    check_feasibility,
)
from src.core.wages import identity, left_limit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BertrandOutcome:
    split: float
    outcome: Outcome


@dataclass(frozen=True)
class Violation:
    """A failed core condition on an interval, with its size."""

    condition: str
    group: str
    interval: Tuple[float, float]
    magnitude: float


@dataclass
class NoEpswVerdict:
    is_core: bool
    violations: List[Violation] = field(default_factory=list)


def make_bertrand(market: Market, v_star: float) -> Outcome:
    """Firm 1 takes productivities below v_star in both groups, firm 2 the rest; wages equal v."""
    return bertrand(market, v_star).outcome


def bertrand(market: Market, v_star: float) -> BertrandOutcome:
    if not 0.0 <= v_star <= 1.0:
        raise DomainError(f"split {v_star} outside [0, 1]")
    rows = []
    for group in ("A", "B"):
        if v_star > 0.0:
            rows.append(Assignment(1, group, HiringPlan.on(0.0, v_star), identity()))
        if v_star < 1.0:
            rows.append(Assignment(2, group, HiringPlan.on(v_star, 1.0), identity()))
    return BertrandOutcome(split=v_star, outcome=Outcome(tuple(rows)))


def competitive_violations(
    market: AnyMarket, outcome: Outcome, econ_tol: float = 1e-7
) -> List[Violation]:
    """Intervals where some group member is unemployed or paid other than their productivity."""
    check_feasibility(market, outcome)
    violations: List[Violation] = []

    for group in market.groups:
        _, dist = market.groups[group]
        plans = [a for a in outcome.assignments if a.group == group]
        edges = sorted({0.0, 1.0, *[e for a in plans for e in a.hiring.edges], *dist.breakpoints})
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi - lo <= 1e-12:
                continue
            mid = 0.5 * (lo + hi)
            total = sum(a.hiring.share_at(mid) for a in plans)
            if total < 1.0 - econ_tol and float(dist.partial_moment(0, lo, hi)) > 0.0:
                violations.append(Violation("employment", group, (lo, hi), 1.0 - total))

        for a in plans:
            for lo, hi, share in a.hiring.intervals:
                if share <= 0.0 or hi <= lo:
                    continue
                # w - v is linear between knots, so its extremes sit on knots (both sides of a jump)
                inner = sorted({v for v in a.wage.vs if lo < v < hi})
                rights = np.array([lo, *inner])
                lefts = np.array([*inner, hi])
                limits = np.array([left_limit(a.wage, v) for v in lefts])
                worst = float(
                    max(np.abs(a.wage(rights) - rights).max(), np.abs(limits - lefts).max())
                )
                if worst > econ_tol:
                    violations.append(Violation("wage", group, (lo, hi), worst))
    return violations


def verify_no_epsw_core(market: Market, outcome: Outcome, econ_tol: float = 1e-7) -> NoEpswVerdict:
    """Check full employment and wage = productivity on every hiring support."""
    violations = competitive_violations(market, outcome, econ_tol)
    verdict = NoEpswVerdict(is_core=not violations, violations=violations)
    logger.info(f"no-EPSW core check: is_core={verdict.is_core} ({len(violations)} violations)")
    return verdict
