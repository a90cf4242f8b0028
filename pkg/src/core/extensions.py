"""Extensions of the two-firm model: heterogeneous treatment, a biased firm, and more firms than groups."""

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from src.core.core_no_epsw import Violation, competitive_violations
from src.core.errors import InapplicableError, InfeasibleVbarError, ParameterError, StructureError
from src.core.market import (
    AccountingReport,
    Assignment,
    HiringPlan,
    Market,
    MultiMarket,
    Outcome,
    accounting,
    employment,
    profit,
    segregated_outcome,
    wage_bill,
)
from src.core.numerics import Bracket, bisect_root
from src.core.wages import WageFunction, flatten_above, identity, shifted

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BiasParams:
    """Firm 1's per-worker disutility lam from employing a B-group worker."""

    lam: float

    def __post_init__(self) -> None:
        if not 0.0 < self.lam < 1.0:
            raise ParameterError(f"bias must lie in (0, 1), got {self.lam}")


@dataclass(frozen=True)
class BiasGapInterval:
    lo: float
    hi: float


@dataclass
class BiasFamilyMember:
    vbar1: float
    vbar2: float
    outcome: Outcome
    gap: float
    g_breve: float
    reduction: float


@dataclass
class HeteroVerdict:
    is_core: bool
    violations: List[Violation] = field(default_factory=list)
    firm1_groups: List[str] = field(default_factory=list)
    gap: float = 0.0


@dataclass
class SegregationVerdict:
    ok: bool
    reason: str = ""


@dataclass
class BenchmarkVerdict:
    ok: bool
    violations: List[str] = field(default_factory=list)


def hetero_example(market: Market, v_set: Sequence[Tuple[float, float]]) -> Outcome:
    """Firm 1 hires A-workers on v_set at w = v; firm 2 hires everyone else at w = v."""
    intervals = sorted((float(lo), float(hi)) for lo, hi in v_set if hi > lo)
    prev = 0.0
    rest = []
    for lo, hi in intervals:
        if lo < prev or hi > 1.0:
            raise StructureError(f"interval [{lo}, {hi}] overlaps another or leaves [0, 1]")
        if lo > prev:
            rest.append((prev, lo, 1.0))
        prev = hi
    if prev < 1.0:
        rest.append((prev, 1.0, 1.0))
    rows = []
    if intervals:
        rows.append(
            Assignment(1, "A", HiringPlan(tuple((lo, hi, 1.0) for lo, hi in intervals)), identity())
        )
    if rest:
        rows.append(Assignment(2, "A", HiringPlan(tuple(rest)), identity()))
    rows.append(Assignment(2, "B", HiringPlan.full(), identity()))
    return Outcome(tuple(rows))


def hetero_verify(market: Market, outcome: Outcome, econ_tol: float = 1e-7) -> HeteroVerdict:
    """Core test when only firm 1 is bound by the equal-pay law.

    Every worker is employed at their productivity and firm 1 employs at most one group.
    """
    violations = competitive_violations(market, outcome, econ_tol)
    groups = [g for g in ("A", "B") if employment(market, outcome, g, firm=1) > econ_tol]
    verdict = HeteroVerdict(
        is_core=not violations and len(groups) <= 1,
        violations=violations,
        firm1_groups=groups,
        gap=accounting(market, outcome).gap,
    )
    logger.info(f"heterogeneous-treatment check: is_core={verdict.is_core} firm1 groups={groups}")
    return verdict


def _spliced_b_wage(lam: float, vbar: float) -> WageFunction:
    """max(0, v - lam) up to vbar, v above it."""
    knots = [(0.0, 0.0)]
    if vbar > lam:
        knots += [(lam, 0.0), (vbar, vbar - lam)]
    else:
        knots.append((vbar, 0.0))
    knots += [(vbar, vbar), (1.0, 1.0)]
    return WageFunction.from_knots(knots)


def bias_no_epsw_core(market: Market, bias: BiasParams, vbar: float) -> Outcome:
    """Firm 1 hires all A at w = v, firm 2 all B at the spliced schedule."""
    if not 0.0 <= vbar <= 1.0:
        raise ParameterError(f"vbar {vbar} outside [0, 1]")
    return segregated_outcome(identity(), _spliced_b_wage(bias.lam, vbar))


def bias_gap_interval(market: Market, bias: BiasParams) -> BiasGapInterval:
    """Wage gaps reachable by core outcomes without an equal-pay law."""
    lo = market.mean_A - market.mean_B
    hi = market.mean_A - wage_bill(market.dist_B, shifted(bias.lam))
    return BiasGapInterval(lo=lo, hi=hi)


def bias_accounting(market: Market, outcome: Outcome, bias: BiasParams) -> AccountingReport:
    """Accounting with firm 1's bias-adjusted payoff next to its raw profit."""
    return accounting(market, outcome, bias=bias.lam)


def bias_group_family(market: Market, bias: BiasParams, vbar1: float) -> BiasFamilyMember:
    """Flatten firm 1's identity schedule above vbar1 and offset it by flattening firm 2's above vbar2."""
    if not 0.0 <= vbar1 <= 1.0:
        raise ParameterError(f"vbar1 {vbar1} outside [0, 1]")
    lam = bias.lam
    base_w2 = shifted(lam)
    g_breve = bias_gap_interval(market, bias).hi
    reduction = market.beta * float(market.dist_A.tail_surplus(vbar1, 1.0))
    dist_B = market.dist_B
    available = float(dist_B.tail_surplus(lam, 1.0))

    if reduction <= 0.0:
        vbar2 = 1.0
    elif reduction > available + 1e-12:
        raise InfeasibleVbarError(
            f"vbar1={vbar1:.6g} cuts A wages by {reduction:.6g}; flattening B wages recovers at most {available:.6g}"
        )
    else:
        vbar2 = bisect_root(
            lambda x: float(dist_B.tail_surplus(x, 1.0)) - reduction, Bracket(lam, 1.0)
        )

    outcome = segregated_outcome(flatten_above(identity(), vbar1), flatten_above(base_w2, vbar2))
    member = BiasFamilyMember(
        vbar1=vbar1,
        vbar2=vbar2,
        outcome=outcome,
        gap=accounting(market, outcome).gap,
        g_breve=g_breve,
        reduction=reduction,
    )
    logger.info(f"bias family: vbar1={vbar1:.6g} vbar2={vbar2:.9g} gap={member.gap:.9g} (G={g_breve:.6g})")
    return member


def group_epsw_bias_segregation_check(
    market: Market, bias: BiasParams, outcome: Outcome, econ_tol: float = 1e-7
) -> SegregationVerdict:
    """With a biased firm 1 under a group law, firm 1 must employ all A-workers and firm 2 all B-workers."""
    expected = {
        (1, "A"): market.beta,
        (1, "B"): 0.0,
        (2, "A"): 0.0,
        (2, "B"): 1.0,
    }
    for (firm, group), target in expected.items():
        got = employment(market, outcome, group, firm=firm)
        if abs(got - target) > econ_tol:
            return SegregationVerdict(
                ok=False, reason=f"firm {firm} employs {got:.6g} of group {group}, expected {target:.6g}"
            )
    return SegregationVerdict(ok=True)


@dataclass
class CompetitiveBenchmark:
    """Expected group-law core with more firms than groups: one group per firm, zero profits."""

    mmarket: MultiMarket
    group_to_firm: dict

    def competitive_outcome(self) -> Outcome:
        return Outcome(
            tuple(
                Assignment(firm, name, HiringPlan.full(), identity())
                for name, firm in self.group_to_firm.items()
            )
        )

    def verify(self, outcome: Outcome, econ_tol: float = 1e-7) -> BenchmarkVerdict:
        problems = [
            f"{v.condition} violated for group {v.group} on [{v.interval[0]:.6g}, {v.interval[1]:.6g}]"
            for v in competitive_violations(self.mmarket, outcome, econ_tol)
        ]
        for firm in outcome.firms:
            groups = {
                a.group for a in outcome.of(firm) if employment(self.mmarket, outcome, a.group, firm) > econ_tol
            }
            if len(groups) > 1:
                problems.append(f"firm {firm} employs several groups: {sorted(groups)}")
            earned = profit(self.mmarket, outcome, firm)
            if abs(earned) > econ_tol:
                problems.append(f"firm {firm} earns {earned:.6g}, not zero")
        return BenchmarkVerdict(ok=not problems, violations=problems)


def n_gt_m_group_benchmark(mmarket: MultiMarket) -> CompetitiveBenchmark:
    if mmarket.n_firms <= mmarket.n_groups:
        raise InapplicableError(
            f"{mmarket.n_firms} firms do not outnumber {mmarket.n_groups} groups"
        )
    mapping = {g.name: i + 1 for i, g in enumerate(mmarket.group_specs)}
    return CompetitiveBenchmark(mmarket=mmarket, group_to_firm=mapping)
