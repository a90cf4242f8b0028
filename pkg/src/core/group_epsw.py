"""Core outcomes under a group-based equal-pay law.

Firms segregate: firm 1 employs the A-group at w1, firm 2 the B-group at w2. A pair of
schedules is a core outcome iff both are individually rational, profits are equal and no
firm gains by desegregating at a uniform wage eps (the desegregation condition, NDC below).

The module builds the phi curve for a given w2 (the largest A-productivity firm 1 can add at
wage eps without beating firm 2's profit), its monotone minorant, the induced maximal-profit
schedule w1hat, and from there existence tests, completed core schedules, the cap/threshold
family of equal-profit outcomes and the smallest group ratio supporting a given w2.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import (
    BracketError,
    InfeasibleDeltaError,
    NoCoreError,
    ParameterError,
    ResolutionError,
)
from src.core.market import Market, Outcome, accounting, segregated_outcome, wage_surplus
from src.core.numerics import (
    DEFAULT_TOLERANCE,
    Bracket,
    Tolerance,
    bisect_many,
    bisect_root,
    golden_section_min,
    running_right_infimum,
)
from src.core.distributions import ProductivityDist
from src.core.wages import (
    WageFunction,
    cap,
    generalized_inverse,
    identity,
    individual_rationality_check,
    left_limit,
    max_shortfall,
    threshold,
)

logger = logging.getLogger(__name__)

DEFAULT_GRID = 2049
MIN_GRID = 33
RESOLUTION_TOL = 1e-5
MAX_REFINEMENTS = 3
# phi is treated as having reached 1 above this level
PHI_CEILING = 1.0 - 1e-9


@dataclass(frozen=True)
class FlatStretch:
    left: float
    right: float
    level: float


@dataclass
class PhiCurve:
    """Sampled phi, its monotone minorant w1hat_inv and the derived statistics."""

    beta: float
    eps_grid: np.ndarray
    phi: np.ndarray
    w1hat_inv: np.ndarray
    ndc_slack: np.ndarray
    E_cap: float
    pi2: float
    pi1_hat: float
    w1hat: WageFunction
    flat_stretches: List[FlatStretch] = field(default_factory=list)

    @property
    def grid_size(self) -> int:
        return int(self.eps_grid.size)

    @property
    def eps_star(self) -> Optional[float]:
        return self.flat_stretches[0].left if self.flat_stretches else None

    def summary(self) -> dict:
        return {
            "beta": self.beta,
            "grid_size": self.grid_size,
            "pi2": self.pi2,
            "pi1_hat": self.pi1_hat,
            "E_cap": self.E_cap,
            "eps_star": self.eps_star,
            "phi_0": float(self.phi[0]),
            "flat_stretches": [[s.left, s.right, s.level] for s in self.flat_stretches],
        }


@dataclass
class ExistenceResult:
    exists: bool
    pi1_hat: float
    pi2: float
    curve: Optional[PhiCurve] = None


@dataclass(frozen=True)
class CompletedWage:
    w1: WageFunction
    x_star: float


@dataclass
class GroupCoreReport:
    ir_ok: bool
    equal_profit_residual: float
    ndc_worst: Tuple[float, float]
    is_core: bool
    profits: Tuple[float, float]
    gap: float
    failed_conditions: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "is_core": self.is_core,
            "ir_ok": self.ir_ok,
            "equal_profit_residual": self.equal_profit_residual,
            "ndc_worst": {"eps": self.ndc_worst[0], "slack": self.ndc_worst[1]},
            "profits": list(self.profits),
            "gap": self.gap,
            "failed_conditions": self.failed_conditions,
        }


@dataclass
class DeltaMember:
    """Equal-profit outcome with w1 = min(v, delta) and w2 = v * 1[v >= delta_prime]."""

    delta: float
    delta_prime: float
    outcome: Outcome
    profit: float
    gap: float
    supportable: bool


@dataclass(frozen=True)
class ShortfallCheck:
    applicable: bool
    holds: bool
    delta: float
    bound: float


def firm1_profit(market: Market, w1: WageFunction) -> float:
    return market.beta * wage_surplus(market.dist_A, w1)


def firm2_profit(market: Market, w2: WageFunction) -> float:
    return wage_surplus(market.dist_B, w2)


def b_term(market: Market, w2: WageFunction, eps: np.ndarray) -> np.ndarray:
    """Surplus firm 1 gains from B-workers it would attract at wage eps."""
    return market.dist_B.tail_surplus(eps, generalized_inverse(w2, eps))


def ndc_slack(
    market: Market, w1: WageFunction, w2: WageFunction, eps: np.ndarray, pi2: Optional[float] = None
) -> np.ndarray:
    """pi2 minus the desegregation profit at uniform wage eps; negative means a profitable block."""
    if pi2 is None:
        pi2 = firm2_profit(market, w2)
    eps = np.asarray(eps, dtype=float)
    gain = market.beta * market.dist_A.tail_surplus(eps, generalized_inverse(w1, eps))
    out = pi2 - gain - b_term(market, w2, eps)
    return float(out) if np.ndim(out) == 0 else out


def phi_values(
    market: Market,
    w2: WageFunction,
    eps: np.ndarray,
    pi2: Optional[float] = None,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> np.ndarray:
    """Vectorised phi: sup of v~ in [eps, 1] with beta*tail_A(eps, v~) + B(eps) <= pi2."""
    if pi2 is None:
        pi2 = firm2_profit(market, w2)
    eps = np.asarray(eps, dtype=float)
    base = b_term(market, w2, eps) - pi2
    beta, dist_A = market.beta, market.dist_A
    return bisect_many(lambda v: beta * dist_A.tail_surplus(eps, v) + base, eps, np.ones_like(eps), tol)


def phi(market: Market, w2: WageFunction, eps: float, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    return float(phi_values(market, w2, np.array([float(eps)]), tol=tol)[0])


def _scalar_phi(
    market: Market, w2: WageFunction, pi2: float, tol: Tolerance
) -> Callable[[float], float]:
    return lambda e: float(phi_values(market, w2, np.array([e]), pi2, tol)[0])


def _locate_E_cap(
    eps: np.ndarray, values: np.ndarray, phi_at: Callable[[float], float], tol: Tolerance
) -> float:
    below = np.flatnonzero(values < PHI_CEILING)
    if below.size == 0:
        return 0.0
    k = int(below[-1])
    if k == eps.size - 1:
        return 1.0
    return bisect_root(lambda e: phi_at(e) - PHI_CEILING, Bracket(eps[k], eps[k + 1]), tol)


def _flat_runs(values: np.ndarray, inv: np.ndarray) -> List[Tuple[int, int]]:
    runs = []
    n = inv.size
    i = 0
    while i < n - 1:
        j = i
        while j + 1 < n and inv[j + 1] == inv[i]:
            j += 1
        if j > i and inv[i] < PHI_CEILING and np.any(values[i : j + 1] > inv[i] + 1e-12):
            runs.append((i, j))
        i = j + 1
    return runs


def _assemble_curve(
    market: Market,
    w2: WageFunction,
    pi2: float,
    eps: np.ndarray,
    values: np.ndarray,
    tol: Tolerance,
) -> PhiCurve:
    inv = running_right_infimum(eps, values)
    phi_at = _scalar_phi(market, w2, pi2, tol)

    knot_eps = eps.copy()
    stretches = []
    for i, j in _flat_runs(values, inv):
        level = float(inv[i])
        left = float(eps[i])
        if i > 0:
            try:
                left = bisect_root(lambda e: phi_at(e) - level, Bracket(eps[i - 1], eps[i]), tol)
            except BracketError:
                logger.debug(f"flat stretch at {eps[i]:.6g}: edge not bracketed, keeping grid value")
            knot_eps[i] = left
        stretches.append(FlatStretch(left=left, right=float(eps[j]), level=level))

    w1hat = WageFunction.from_knots([(0.0, 0.0)] + list(zip(inv.tolist(), knot_eps.tolist())))
    slack = pi2 - market.beta * market.dist_A.tail_surplus(eps, inv) - b_term(market, w2, eps)
    return PhiCurve(
        beta=market.beta,
        eps_grid=eps,
        phi=values,
        w1hat_inv=inv,
        ndc_slack=slack,
        E_cap=_locate_E_cap(eps, values, phi_at, tol),
        pi2=pi2,
        pi1_hat=firm1_profit(market, w1hat),
        w1hat=w1hat,
        flat_stretches=stretches,
    )


def eps_grid(grid_size: int) -> np.ndarray:
    """eps = t^2 on a uniform t grid; phi - eps grows like sqrt(eps) near 0, which is smooth in t."""
    t = np.linspace(0.0, 1.0, grid_size)
    return t * t


def build_phi_curve(
    market: Market,
    w2: WageFunction,
    grid_size: int = DEFAULT_GRID,
    tol: Tolerance = DEFAULT_TOLERANCE,
    check_resolution: bool = True,
) -> PhiCurve:
    """Sample phi on the eps grid and derive w1hat_inv, w1hat, E_cap and pi1_hat.

    With check_resolution the result is compared against the half-resolution curve. While
    pi1_hat moves by more than RESOLUTION_TOL the grid is doubled, at most MAX_REFINEMENTS
    times; after that ResolutionError carries a suggested grid size.
    """
    if grid_size < MIN_GRID:
        raise ParameterError(f"grid size {grid_size} is below the minimum of {MIN_GRID}")
    pi2 = firm2_profit(market, w2)
    eps = eps_grid(grid_size)
    values = phi_values(market, w2, eps, pi2, tol)
    curve = _assemble_curve(market, w2, pi2, eps, values, tol)

    if check_resolution and (grid_size + 1) // 2 >= MIN_GRID:
        if grid_size % 2 == 1:
            c_eps, c_values = eps[::2], values[::2]
        else:
            c_eps = eps_grid((grid_size + 1) // 2)
            c_values = phi_values(market, w2, c_eps, pi2, tol)
        coarse = _assemble_curve(market, w2, pi2, c_eps, c_values, tol)
        shift = abs(coarse.pi1_hat - curve.pi1_hat)
        refinements = 0
        while shift > RESOLUTION_TOL:
            size = eps.size
            if refinements == MAX_REFINEMENTS:
                raise ResolutionError(
                    f"pi1_hat still moves by {shift:.3e} at {size} points",
                    suggested_grid=2 * size - 1,
                )
            fine_size = 2 * size - 1
            logger.info(f"pi1_hat moved by {shift:.3e} at {size} points; refining to {fine_size}")
            f_eps = eps_grid(fine_size)
            f_eps[::2] = eps
            f_values = np.empty(fine_size)
            f_values[::2] = values
            f_values[1::2] = phi_values(market, w2, f_eps[1::2], pi2, tol)
            fine = _assemble_curve(market, w2, pi2, f_eps, f_values, tol)
            shift = abs(fine.pi1_hat - curve.pi1_hat)
            curve, eps, values = fine, f_eps, f_values
            refinements += 1

    logger.info(
        f"phi curve: beta={market.beta:.6g} N={curve.grid_size} pi2={pi2:.6g} "
        f"pi1_hat={curve.pi1_hat:.6g} E={curve.E_cap:.6g} eps*={curve.eps_star}"
    )
    return curve


def core_exists_with_w2(
    market: Market,
    w2: WageFunction,
    grid_size: int = DEFAULT_GRID,
    econ_tol: float = 1e-7,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> ExistenceResult:
    """A core with B-wages w2 exists iff pi1_hat >= pi2."""
    pi2 = firm2_profit(market, w2)
    if pi2 <= econ_tol:
        # zero-profit core: both firms pay productivity
        return ExistenceResult(exists=True, pi1_hat=0.0, pi2=pi2)
    curve = build_phi_curve(market, w2, grid_size, tol)
    return ExistenceResult(
        exists=curve.pi1_hat >= pi2 - econ_tol, pi1_hat=curve.pi1_hat, pi2=pi2, curve=curve
    )


def complete_w1(
    market: Market,
    w2: WageFunction,
    curve: Optional[PhiCurve],
    econ_tol: float = 1e-7,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> CompletedWage:
    """w1 = w1hat below x*, identity above, with x* equalising firm 1's profit to pi2."""
    pi2 = curve.pi2 if curve is not None else firm2_profit(market, w2)
    if pi2 <= econ_tol:
        return CompletedWage(w1=identity(), x_star=0.0)
    if curve is None or curve.pi1_hat < pi2 - econ_tol:
        pi1_hat = curve.pi1_hat if curve is not None else float("nan")
        raise NoCoreError(f"no core outcome pays w2: pi1_hat={pi1_hat:.6g} < pi2={pi2:.6g}")

    w1hat = curve.w1hat
    beta, dist_A = market.beta, market.dist_A

    def excess(x: float) -> float:
        return beta * wage_surplus(dist_A, w1hat, 0.0, x) - pi2

    if excess(1.0) <= 0.0:
        x_star = 1.0
    else:
        x_star = bisect_root(excess, Bracket(0.0, 1.0), tol)

    knots = [(v, w) for v, w in w1hat.knots if v < x_star]
    knots += [(x_star, left_limit(w1hat, x_star)), (x_star, x_star), (1.0, 1.0)]
    w1 = WageFunction.from_knots(knots)
    logger.info(f"completed w1 at x*={x_star:.9g} (pi1={firm1_profit(market, w1):.9g}, pi2={pi2:.9g})")
    return CompletedWage(w1=w1, x_star=x_star)


def _ndc_points(w1: WageFunction, w2: WageFunction, grid_size: int) -> np.ndarray:
    pts = np.concatenate([np.linspace(0.0, 1.0, grid_size), np.asarray(w1.ws), np.asarray(w2.ws)])
    return np.unique(np.clip(pts, 0.0, 1.0))


def verify_group_core(
    market: Market,
    w1: WageFunction,
    w2: WageFunction,
    grid_size: int = DEFAULT_GRID,
    econ_tol: float = 1e-7,
) -> GroupCoreReport:
    """Check individual rationality, equal profit and the desegregation condition."""
    ir_ok = individual_rationality_check(w1, econ_tol).ok and individual_rationality_check(w2, econ_tol).ok
    pi1 = firm1_profit(market, w1)
    pi2 = firm2_profit(market, w2)
    residual = pi1 - pi2

    pts = _ndc_points(w1, w2, grid_size)
    slack = ndc_slack(market, w1, w2, pts, pi2)
    k = int(np.argmin(slack))
    worst_eps, worst_slack = float(pts[k]), float(slack[k])
    lo = float(pts[max(k - 1, 0)])
    hi = float(pts[min(k + 1, pts.size - 1)])
    if hi > lo:
        x, value = golden_section_min(
            lambda e: ndc_slack(market, w1, w2, e, pi2), Bracket(lo, hi), Tolerance(abs_tol=1e-12)
        )
        if value < worst_slack:
            worst_eps, worst_slack = x, value

    failed = []
    if not ir_ok:
        failed.append("individual_rationality")
    if abs(residual) > econ_tol:
        failed.append("equal_profit")
    if worst_slack < -econ_tol:
        failed.append("no_desegregation")

    report = GroupCoreReport(
        ir_ok=ir_ok,
        equal_profit_residual=residual,
        ndc_worst=(worst_eps, worst_slack),
        is_core=not failed,
        profits=(pi1, pi2),
        gap=accounting(market, segregated_outcome(w1, w2)).gap,
        failed_conditions=failed,
    )
    logger.info(f"group core check: is_core={report.is_core} failed={failed}")
    return report


def delta_family(market: Market, delta: float, econ_tol: float = 1e-7) -> DeltaMember:
    """Solve beta * int_delta^1 (v - delta) f_A = int_0^delta' v f_B for delta'."""
    if not 0.0 <= delta <= 1.0:
        raise ParameterError(f"delta {delta} outside [0, 1]")
    lhs = market.beta * float(market.dist_A.tail_surplus(delta, 1.0))
    dist_B = market.dist_B
    available = float(dist_B.cumulative(1, 1.0))
    if lhs > available + 1e-12:
        raise InfeasibleDeltaError(
            f"cap {delta:.6g} leaves firm 1 a profit of {lhs:.6g}, above the whole B surplus {available:.6g}"
        )
    if lhs <= 0.0:
        delta_prime = 0.0
    elif lhs >= available:
        delta_prime = 1.0
    else:
        delta_prime = bisect_root(lambda d: float(dist_B.cumulative(1, d)) - lhs, Bracket(0.0, 1.0))

    outcome = segregated_outcome(cap(delta), threshold(delta_prime))
    member = DeltaMember(
        delta=delta,
        delta_prime=delta_prime,
        outcome=outcome,
        profit=lhs,
        gap=accounting(market, outcome).gap,
        supportable=delta >= delta_prime - econ_tol,
    )
    logger.debug(f"delta family: delta={delta:.6g} delta'={delta_prime:.6g} supportable={member.supportable}")
    return member


def delta_sweep(market: Market, deltas: Sequence[float], econ_tol: float = 1e-7) -> List[DeltaMember]:
    """Family members for each delta; infeasible caps are skipped."""
    rows = []
    for delta in deltas:
        try:
            rows.append(delta_family(market, float(delta), econ_tol))
        except InfeasibleDeltaError as e:
            logger.info(f"skipping delta={delta}: {e}")
    return rows


def beta_star(
    dist_A: ProductivityDist,
    dist_B: ProductivityDist,
    w2: WageFunction,
    beta_hi: float = 1000.0,
    grid_size: int = DEFAULT_GRID,
    econ_tol: float = 1e-7,
    tol: Tolerance = Tolerance(abs_tol=1e-6, rel_tol=1e-6),
) -> float:
    """Smallest beta in [1, beta_hi] at which a core paying w2 exists; inf when none does.

    Found by doubling a bracket and bisecting on pi1_hat(beta) - pi2. Sharp only when the
    B-term is non-increasing in eps; otherwise it is the smallest beta found on that search.
    """
    if beta_hi < 1.0:
        raise ParameterError(f"beta_hi must be >= 1, got {beta_hi}")
    base = Market(1.0, dist_A, dist_B)
    pi2 = firm2_profit(base, w2)
    if pi2 <= econ_tol:
        return 1.0

    def margin(beta: float) -> float:
        curve = build_phi_curve(base.with_beta(beta), w2, grid_size, check_resolution=False)
        return curve.pi1_hat - pi2 + econ_tol

    if margin(1.0) >= 0.0:
        return 1.0
    lo, hi = 1.0, min(2.0, beta_hi)
    while margin(hi) < 0.0:
        if hi >= beta_hi:
            logger.info(f"no core paying w2 up to beta={beta_hi}")
            return math.inf
        lo, hi = hi, min(2.0 * hi, beta_hi)
    result = bisect_root(margin, Bracket(lo, hi), tol)
    logger.info(f"beta*={result:.9g} (pi2={pi2:.6g})")
    return result


def shortfall_bound(
    market: Market, w1: WageFunction, pi2: float, econ_tol: float = 1e-7
) -> ShortfallCheck:
    """(beta/2) * delta^2 * f_A_lower <= pi2 with delta the largest shortfall v - w1(v)."""
    _, delta = max_shortfall(w1)
    f_lower = market.dist_A.f_lower
    if f_lower <= 0.0:
        return ShortfallCheck(applicable=False, holds=True, delta=delta, bound=0.0)
    bound = 0.5 * market.beta * delta * delta * f_lower
    return ShortfallCheck(applicable=True, holds=bound <= pi2 + econ_tol, delta=delta, bound=bound)
