"""Market primitives and outcome accounting."""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from src.core.distributions import ProductivityDist
from src.core.errors import FeasibilityError, ParameterError, StructureError
from src.core.numerics import integrate_piecewise
from src.core.wages import WageFunction, from_knots

logger = logging.getLogger(__name__)

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class Market:
    """Two-group market: A-group of measure beta, B-group of measure one."""

    beta: float
    dist_A: ProductivityDist
    dist_B: ProductivityDist

    def __post_init__(self) -> None:
        if not math.isfinite(self.beta) or self.beta < 1.0:
            raise ParameterError(f"beta must be a finite number >= 1, got {self.beta}")

    @property
    def groups(self) -> Dict[str, Tuple[float, ProductivityDist]]:
        return {"A": (self.beta, self.dist_A), "B": (1.0, self.dist_B)}

    @property
    def mean_A(self) -> float:
        return self.dist_A.mean

    @property
    def mean_B(self) -> float:
        return self.dist_B.mean

    def with_beta(self, beta: float) -> "Market":
        return Market(beta, self.dist_A, self.dist_B)


@dataclass(frozen=True)
class GroupSpec:
    name: str
    size: float
    dist: ProductivityDist


@dataclass(frozen=True)
class MultiMarket:
    """n firms and m groups whose sizes sum to one."""

    n_firms: int
    group_specs: Tuple[GroupSpec, ...]

    def __post_init__(self) -> None:
        if self.n_firms < 2:
            raise ParameterError(f"need at least two firms, got {self.n_firms}")
        if not self.group_specs:
            raise StructureError("a multi-group market needs at least one group")
        if any(g.size <= 0 for g in self.group_specs):
            raise ParameterError("group sizes must be positive")
        total = sum(g.size for g in self.group_specs)
        if abs(total - 1.0) > 1e-10:
            raise ParameterError(f"group sizes sum to {total}, not 1")
        names = [g.name for g in self.group_specs]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate group names in {names}")

    @property
    def groups(self) -> Dict[str, Tuple[float, ProductivityDist]]:
        return {g.name: (g.size, g.dist) for g in self.group_specs}

    @property
    def n_groups(self) -> int:
        return len(self.group_specs)


AnyMarket = Union[Market, MultiMarket]


@dataclass(frozen=True)
class HiringPlan:
    """Hiring density as a share of the ambient group density on disjoint intervals."""

    intervals: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        prev = 0.0
        for lo, hi, share in self.intervals:
            if lo < -_EDGE_TOL or hi > 1.0 + _EDGE_TOL or hi < lo:
                raise StructureError(f"hiring interval [{lo}, {hi}] is not inside [0, 1]")
            if lo < prev - _EDGE_TOL:
                raise StructureError(f"hiring intervals overlap or are unordered at {lo}")
            if not 0.0 <= share <= 1.0 + _EDGE_TOL:
                raise StructureError(f"hiring share {share} outside [0, 1]")
            prev = hi

    @classmethod
    def full(cls) -> "HiringPlan":
        return cls(((0.0, 1.0, 1.0),))

    @classmethod
    def empty(cls) -> "HiringPlan":
        return cls(())

    @classmethod
    def on(cls, lo: float, hi: float, share: float = 1.0) -> "HiringPlan":
        return cls(((float(lo), float(hi), float(share)),) if hi > lo else ())

    @classmethod
    def from_list(cls, rows: Iterable[Sequence[float]]) -> "HiringPlan":
        return cls(tuple((float(r[0]), float(r[1]), float(r[2]) if len(r) > 2 else 1.0) for r in rows))

    def share_at(self, v: float) -> float:
        for lo, hi, share in self.intervals:
            if lo <= v < hi or (v == hi == 1.0):
                return share
        return 0.0

    @property
    def edges(self) -> List[float]:
        out: List[float] = []
        for lo, hi, _ in self.intervals:
            out.extend((lo, hi))
        return out

    def to_list(self) -> List[List[float]]:
        return [[lo, hi, share] for lo, hi, share in self.intervals]


@dataclass(frozen=True)
class Assignment:
    firm: int
    group: str
    hiring: HiringPlan
    wage: WageFunction

    def to_dict(self) -> Dict[str, Any]:
        return {
            "firm": self.firm,
            "group": self.group,
            "hiring": self.hiring.to_list(),
            "wage": self.wage.to_list(),
        }


@dataclass(frozen=True)
class Outcome:
    """Per-firm, per-group hiring plans and wage schedules."""

    assignments: Tuple[Assignment, ...]

    @property
    def firms(self) -> List[int]:
        return sorted({a.firm for a in self.assignments})

    def of(self, firm: int, group: Optional[str] = None) -> List[Assignment]:
        return [
            a for a in self.assignments if a.firm == firm and (group is None or a.group == group)
        ]

    def wage(self, firm: int, group: str) -> Optional[WageFunction]:
        found = self.of(firm, group)
        return found[0].wage if found else None

    def to_dict(self) -> Dict[str, Any]:
        return {"assignments": [a.to_dict() for a in self.assignments]}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Outcome":
        try:
            rows = data["assignments"]
            return cls(
                tuple(
                    Assignment(
                        firm=int(row["firm"]),
                        group=str(row["group"]),
                        hiring=HiringPlan.from_list(row["hiring"]),
                        wage=from_knots(row["wage"]),
                    )
                    for row in rows
                )
            )
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise StructureError(f"malformed outcome document: {e}") from e


@dataclass
class AccountingReport:
    """Profits, average wages, surpluses and employment of a two-group outcome.

    Average wages are per unit of group mass with unemployed workers at wage zero;
    employment is reported as a measure (A-group hires count with weight beta).
    """

    profit_1: float
    profit_2: float
    aw_A: float
    aw_B: float
    ts_A: float
    ts_B: float
    gap: float
    employment_A: float
    employment_B: float
    payoff_1: float = 0.0
    extra: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def check_feasibility(market: AnyMarket, outcome: Outcome) -> None:
    """Raise FeasibilityError if the shares of some group exceed one on an interval."""
    known = market.groups
    for group in sorted({a.group for a in outcome.assignments}):
        if group not in known:
            raise StructureError(f"outcome hires from unknown group '{group}'")
        plans = [a.hiring for a in outcome.assignments if a.group == group]
        edges = sorted({0.0, 1.0, *[e for p in plans for e in p.edges]})
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi - lo <= _EDGE_TOL:
                continue
            mid = 0.5 * (lo + hi)
            total = sum(p.share_at(mid) for p in plans)
            if total > 1.0 + 1e-9:
                raise FeasibilityError(
                    f"group {group} is over-hired on [{lo:.6g}, {hi:.6g}] (total share {total:.6g})",
                    group=group,
                    interval=(lo, hi),
                    total=total,
                )


def _surplus_segments(
    dist: ProductivityDist, wage: WageFunction, lo: float, hi: float, shift: float = 0.0
) -> List[Tuple[Tuple[float, float], Polynomial]]:
    """Polynomial pieces of (v - shift - w(v)) f(v) on [lo, hi]."""
    cuts = {lo, hi}
    cuts.update(x for x in dist.breakpoints if lo < x < hi)
    cuts.update(v for v in wage.vs if lo < v < hi)
    edges = sorted(cuts)
    lines = np.array(wage.pieces())
    segments = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= _EDGE_TOL:
            continue
        mid = 0.5 * (a + b)
        c0, c1 = _wage_line_at(lines, mid)
        margin = Polynomial([-shift - c0, 1.0 - c1])
        segments.append(((a, b), margin * dist.poly_at(mid)))
    return segments


def _wage_line_at(lines: np.ndarray, v: float) -> Tuple[float, float]:
    """Intercept and slope of the wage piece containing v; rows of ``lines`` are (a, b, c0, c1)."""
    i = int(np.searchsorted(lines[:, 0], v, side="right")) - 1
    i = min(max(i, 0), len(lines) - 1)
    return float(lines[i, 2]), float(lines[i, 3])


def exact_surplus(
    dist: ProductivityDist, wage: WageFunction, lo: float = 0.0, hi: float = 1.0
) -> float:
    """Integral of (v - w(v)) f(v) over [lo, hi] by Gauss-Legendre quadrature per piece."""
    if hi <= lo:
        return 0.0
    return integrate_piecewise(_surplus_segments(dist, wage, lo, hi))


def wage_surplus(
    dist: ProductivityDist, wage: WageFunction, lo: float = 0.0, hi: float = 1.0
) -> float:
    """Integral of (v - w(v)) f(v) over [lo, hi] through the antiderivative tables."""
    if hi <= lo:
        return 0.0
    pieces = np.array(wage.pieces())
    a = np.clip(pieces[:, 0], lo, hi)
    b = np.clip(pieces[:, 1], lo, hi)
    keep = b > a
    if not keep.any():
        return 0.0
    return float(
        np.sum(dist.linear_integral(a[keep], b[keep], -pieces[keep, 2], 1.0 - pieces[keep, 3]))
    )


def wage_bill(dist: ProductivityDist, wage: WageFunction, lo: float = 0.0, hi: float = 1.0) -> float:
    """Integral of w(v) f(v) over [lo, hi]."""
    if hi <= lo:
        return 0.0
    return float(dist.partial_moment(1, lo, hi)) - wage_surplus(dist, wage, lo, hi)


def profit(market: AnyMarket, outcome: Outcome, firm: int) -> float:
    """Group-weighted surplus the firm keeps from its hires."""
    check_feasibility(market, outcome)
    total = 0.0
    for a in outcome.of(firm):
        weight, dist = market.groups[a.group]
        for lo, hi, share in a.hiring.intervals:
            total += weight * share * exact_surplus(dist, a.wage, lo, hi)
    return total


def employment(market: AnyMarket, outcome: Outcome, group: str, firm: Optional[int] = None) -> float:
    """Employed measure of a group (optionally at one firm)."""
    weight, dist = market.groups[group]
    total = 0.0
    for a in outcome.assignments:
        if a.group != group or (firm is not None and a.firm != firm):
            continue
        for lo, hi, share in a.hiring.intervals:
            total += share * float(dist.partial_moment(0, lo, hi))
    return weight * total


def average_wage(market: AnyMarket, outcome: Outcome, group: str) -> float:
    """Average wage over all group members; the unemployed count at zero."""
    _, dist = market.groups[group]
    total = 0.0
    for a in outcome.assignments:
        if a.group != group:
            continue
        for lo, hi, share in a.hiring.intervals:
            total += share * wage_bill(dist, a.wage, lo, hi)
    return total


def payoff(market: Market, outcome: Outcome, firm: int, bias: float = 0.0) -> float:
    """Profit as the firm perceives it: a biased firm 1 values a B-hire at v - bias."""
    value = profit(market, outcome, firm)
    if firm == 1 and bias:
        value -= bias * employment(market, outcome, "B", firm=1)
    return value


def accounting(market: Market, outcome: Outcome, bias: float = 0.0) -> AccountingReport:
    check_feasibility(market, outcome)
    aw_A = average_wage(market, outcome, "A")
    aw_B = average_wage(market, outcome, "B")
    profit_1 = profit(market, outcome, 1)
    report = AccountingReport(
        profit_1=profit_1,
        profit_2=profit(market, outcome, 2),
        aw_A=aw_A,
        aw_B=aw_B,
        ts_A=market.beta * market.mean_A,
        ts_B=market.mean_B,
        gap=aw_A - aw_B,
        employment_A=employment(market, outcome, "A"),
        employment_B=employment(market, outcome, "B"),
        payoff_1=profit_1 - bias * employment(market, outcome, "B", firm=1) if bias else profit_1,
    )
    logger.debug(f"accounting: profits=({report.profit_1:.6g}, {report.profit_2:.6g}) gap={report.gap:.6g}")
    return report


def gap_identity_residual(market: Market, report: AccountingReport) -> float:
    """|TS_A - TS_B + (1 - beta) AW_A - (AW_A - AW_B)|; zero under equal profit with segregation."""
    lhs = report.ts_A - report.ts_B + (1.0 - market.beta) * report.aw_A
    return abs(lhs - (report.aw_A - report.aw_B))


def segregated_outcome(w1: WageFunction, w2: WageFunction) -> Outcome:
    """Firm 1 hires the whole A-group at w1, firm 2 the whole B-group at w2."""
    return Outcome(
        (
            Assignment(1, "A", HiringPlan.full(), w1),
            Assignment(2, "B", HiringPlan.full(), w2),
        )
    )
