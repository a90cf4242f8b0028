"""Brute-force blocking search on a discretised market.

The productivity axis is cut into equal cells. For every firm, group and cell the discretised
market keeps exact sums over the hired portion (mass, productivity, wage bill) and the largest
wage paid there, so each candidate deviation is priced exactly. A cell portion is only counted
as poachable when every worker in it accepts, which keeps certificates sound: a reported block
is a genuine block of the continuum outcome. The search never certifies core membership; an
empty search only means no block was found at this resolution.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.core.errors import ParameterError
from src.core.market import AnyMarket, Outcome, check_feasibility, payoff, profit, wage_bill
from src.core.wages import generalized_inverse, left_limit
from src.models import BlockKind, Regime

logger = logging.getLogger(__name__)

MIN_BINS = 8
MAX_BINS = 256


@dataclass(frozen=True)
class BlockCertificate:
    firm: int
    kind: BlockKind
    params: Dict[str, Any]
    profit_gain: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "firm": self.firm,
            "kind": self.kind.value,
            "params": self.params,
            "profit_gain": self.profit_gain,
        }


@dataclass
class OracleVerdict:
    """core_at_resolution means no block was found; it is not a proof of core membership."""

    core_at_resolution: bool
    bins: int
    regime: Regime
    certificate: Optional[BlockCertificate] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "core_at_resolution": self.core_at_resolution,
            "bins": self.bins,
            "regime": self.regime.value,
            "certificate": self.certificate.to_dict() if self.certificate else None,
        }


@dataclass
class DiscreteMarket:
    """Cell sums of a market and an outcome; arrays are indexed (firm, group, cell)."""

    bins: int
    edges: np.ndarray
    group_names: List[str]
    firms: List[int]
    mass: np.ndarray
    value: np.ndarray
    hired_mass: np.ndarray
    hired_value: np.ndarray
    wage_bill: np.ndarray
    wage_max: np.ndarray
    own_profit: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def unemployed_mass(self) -> np.ndarray:
        return np.maximum(self.mass - self.hired_mass.sum(axis=0), 0.0)

    @property
    def unemployed_value(self) -> np.ndarray:
        return np.maximum(self.value - self.hired_value.sum(axis=0), 0.0)

    def firm_index(self, firm: int) -> int:
        return self.firms.index(firm)


def discretize(market: AnyMarket, outcome: Outcome, bins: int) -> DiscreteMarket:
    if not MIN_BINS <= bins <= MAX_BINS:
        raise ParameterError(f"bins must lie in [{MIN_BINS}, {MAX_BINS}], got {bins}")
    check_feasibility(market, outcome)
    edges = np.linspace(0.0, 1.0, bins + 1)
    names = list(market.groups)
    n_firms = getattr(market, "n_firms", 2)
    firms = sorted(set(range(1, n_firms + 1)) | set(outcome.firms))
    shape = (len(firms), len(names), bins)

    mass = np.zeros((len(names), bins))
    value = np.zeros((len(names), bins))
    for g, name in enumerate(names):
        weight, dist = market.groups[name]
        mass[g] = weight * np.diff(dist.cdf(edges))
        value[g] = weight * np.diff(dist.cumulative(1, edges))

    hired_mass = np.zeros(shape)
    hired_value = np.zeros(shape)
    bill = np.zeros(shape)
    wage_max = np.zeros(shape)
    for a in outcome.assignments:
        f = firms.index(a.firm)
        g = names.index(a.group)
        weight, dist = market.groups[a.group]
        for lo, hi, share in a.hiring.intervals:
            if share <= 0.0 or hi <= lo:
                continue
            first = max(int(np.searchsorted(edges, lo, side="right")) - 1, 0)
            last = min(int(np.searchsorted(edges, hi, side="left")), bins)
            for c in range(first, last):
                x0 = max(lo, edges[c])
                x1 = min(hi, edges[c + 1])
                if x1 <= x0:
                    continue
                scale = weight * share
                m = scale * float(dist.cdf(x1) - dist.cdf(x0))
                if m <= 0.0:
                    continue
                hired_mass[f, g, c] += m
                hired_value[f, g, c] += scale * float(dist.partial_moment(1, x0, x1))
                bill[f, g, c] += scale * wage_bill(dist, a.wage, x0, x1)
                # sup of a non-decreasing wage over [x0, x1)
                wage_max[f, g, c] = max(wage_max[f, g, c], left_limit(a.wage, x1))

    dm = DiscreteMarket(
        bins=bins,
        edges=edges,
        group_names=names,
        firms=firms,
        mass=mass,
        value=value,
        hired_mass=hired_mass,
        hired_value=hired_value,
        wage_bill=bill,
        wage_max=wage_max,
    )
    logger.debug(f"discretised {len(outcome.assignments)} assignments into {bins} cells")
    return dm


def _bias_vector(dm: DiscreteMarket, firm: int, bias: Optional[float]) -> np.ndarray:
    """Per-group valuation penalty a firm attaches to each hire."""
    out = np.zeros(len(dm.group_names))
    if bias and firm == 1 and "B" in dm.group_names:
        out[dm.group_names.index("B")] = bias
    return out


def _own_payoff(dm: DiscreteMarket, f: int, adj: np.ndarray) -> float:
    net = dm.hired_value[f] - dm.wage_bill[f] - adj[:, None] * dm.hired_mass[f]
    return float(net.sum())


def _fire(dm: DiscreteMarket, f: int, adj: np.ndarray) -> Optional[BlockCertificate]:
    net = dm.hired_value[f] - dm.wage_bill[f] - adj[:, None] * dm.hired_mass[f]
    losing = net < 0.0
    gain = float(-net[losing].sum())
    if gain <= 0.0:
        return None
    return BlockCertificate(dm.firms[f], BlockKind.FIRE, {"cells": int(losing.sum())}, gain)


def _poach_all(
    dm: DiscreteMarket, f: int, adj: np.ndarray, own: float, step: float
) -> List[BlockCertificate]:
    out = []
    for r, rival in enumerate(dm.firms):
        if r == f or dm.hired_mass[r].sum() <= 0.0:
            continue
        net = dm.hired_value[r] - dm.wage_bill[r] - (step + adj[:, None]) * dm.hired_mass[r]
        gain = float(np.maximum(net, 0.0).sum()) - own
        out.append(
            BlockCertificate(dm.firms[f], BlockKind.POACH_ALL, {"rival": rival, "step": step}, gain)
        )
    return out


def _hire_unemployed(
    dm: DiscreteMarket, f: int, adj: np.ndarray, regime: Regime
) -> Optional[BlockCertificate]:
    own_groups = [g for g in range(len(dm.group_names)) if dm.hired_mass[f, g].sum() > 0.0]
    if regime == Regime.GROUP:
        # hiring another group would desegregate; that deviation is priced separately
        if len(own_groups) != 1:
            return None
        groups = own_groups
    else:
        groups = list(range(len(dm.group_names)))
    u_mass = dm.unemployed_mass
    u_value = dm.unemployed_value
    gain = 0.0
    cells = 0
    for g in groups:
        # a new hire at v earns the highest wage the firm pays below v, keeping wages monotone
        floor = np.concatenate([[0.0], np.maximum.accumulate(dm.wage_max[f, g])[:-1]])
        free = (dm.hired_mass[f, g] <= 0.0) & (u_mass[g] > 0.0)
        net = u_value[g] - (floor + adj[g]) * u_mass[g]
        take = free & (net > 0.0)
        gain += float(net[take].sum())
        cells += int(take.sum())
    if gain <= 0.0:
        return None
    return BlockCertificate(dm.firms[f], BlockKind.HIRE_UNEMPLOYED, {"cells": cells}, gain)


def _uniform_wage(
    dm: DiscreteMarket, f: int, adj: np.ndarray, own: float, regime: Regime, step: float
) -> Optional[BlockCertificate]:
    masses, values, thresholds, strict = [], [], [], []
    for r in range(len(dm.firms)):
        m = dm.hired_mass[r]
        keep = m > 0.0
        masses.append(m[keep])
        values.append((dm.hired_value[r] - adj[:, None] * m)[keep])
        thresholds.append(dm.wage_max[r][keep])
        strict.append(np.full(int(keep.sum()), r != f))
    u_mass = dm.unemployed_mass
    keep = u_mass > 0.0
    masses.append(u_mass[keep])
    values.append((dm.unemployed_value - adj[:, None] * u_mass)[keep])
    thresholds.append(np.zeros(int(keep.sum())))
    strict.append(np.zeros(int(keep.sum()), dtype=bool))

    mass = np.concatenate(masses)
    value = np.concatenate(values)
    thr = np.concatenate(thresholds)
    strict_arr = np.concatenate(strict)
    if mass.size == 0:
        return None

    rival_thr = thr[strict_arr]
    candidates = np.unique(
        np.clip(
            np.concatenate([[0.0], dm.edges, thr[~strict_arr], rival_thr + step]), 0.0, 1.0
        )
    )
    w = candidates[:, None]
    accepts = np.where(strict_arr[None, :], thr[None, :] < w, thr[None, :] <= w)
    net = value[None, :] - w * mass[None, :]
    gains = np.where(accepts & (net > 0.0), net, 0.0).sum(axis=1) - own
    k = int(np.argmax(gains))
    kind = BlockKind.DESEGREGATE if regime == Regime.GROUP else BlockKind.UNIFORM_WAGE
    return BlockCertificate(dm.firms[f], kind, {"wage": float(candidates[k])}, float(gains[k]))


def find_block(
    dm: DiscreteMarket,
    regime: Regime,
    bias: Optional[float] = None,
    econ_tol: float = 1e-7,
    wage_step: float = 1e-4,
) -> Optional[BlockCertificate]:
    """Best strictly profitable deviation over all firms and families, or None."""
    best: Optional[BlockCertificate] = None
    for f, firm in enumerate(dm.firms):
        adj = _bias_vector(dm, firm, bias)
        own = _own_payoff(dm, f, adj)
        found: List[Optional[BlockCertificate]] = [_fire(dm, f, adj)]
        found += _poach_all(dm, f, adj, own, wage_step)
        if regime != Regime.NONGROUP:
            found.append(_hire_unemployed(dm, f, adj, regime))
        found.append(_uniform_wage(dm, f, adj, own, regime, wage_step))
        for cert in found:
            if cert is None or cert.profit_gain <= econ_tol:
                continue
            if best is None or cert.profit_gain > best.profit_gain:
                best = cert
    return best


def recheck_certificate(
    market: AnyMarket, outcome: Outcome, certificate: BlockCertificate, bias: Optional[float] = None
) -> float:
    """Continuum gain of a certificate; uniform-wage blocks are re-priced over exact acceptance sets."""
    if certificate.kind not in (BlockKind.UNIFORM_WAGE, BlockKind.DESEGREGATE):
        return certificate.profit_gain
    w = float(certificate.params["wage"])
    firm = certificate.firm
    total = 0.0
    for name, (weight, dist) in market.groups.items():
        adj = bias if (bias and firm == 1 and name == "B") else 0.0
        plans = [a for a in outcome.assignments if a.group == name]
        for a in plans:
            top = float(generalized_inverse(a.wage, w))
            for lo, hi, share in a.hiring.intervals:
                x0, x1 = max(lo, w + adj), min(hi, top)
                if x1 > x0:
                    total += weight * share * float(dist.linear_integral(x0, x1, -(w + adj), 1.0))
        edges = sorted({0.0, 1.0, *[e for a in plans for e in a.hiring.edges]})
        for lo, hi in zip(edges[:-1], edges[1:]):
            free = 1.0 - sum(a.hiring.share_at(0.5 * (lo + hi)) for a in plans)
            x0 = max(lo, w + adj)
            if free > 0.0 and hi > x0:
                total += weight * free * float(dist.linear_integral(x0, hi, -(w + adj), 1.0))
    own = payoff(market, outcome, firm, bias or 0.0) if hasattr(market, "beta") else profit(market, outcome, firm)
    gain = total - own
    logger.info(
        f"certificate recheck: firm {firm} {certificate.kind.value} at w={w:.6g}: "
        f"discrete gain {certificate.profit_gain:.6g}, continuum gain {gain:.6g}"
    )
    return gain


def oracle_is_core(
    market: AnyMarket,
    outcome: Outcome,
    regime: Regime,
    bins: int = 64,
    bias: Optional[float] = None,
    econ_tol: float = 1e-7,
    wage_step: float = 1e-4,
) -> OracleVerdict:
    dm = discretize(market, outcome, bins)
    cert = find_block(dm, regime, bias, econ_tol, wage_step)
    verdict = OracleVerdict(core_at_resolution=cert is None, bins=bins, regime=regime, certificate=cert)
    if cert is None:
        logger.info(f"oracle: no block found at {bins} bins ({regime.value})")
    else:
        logger.info(
            f"oracle: firm {cert.firm} blocks via {cert.kind.value} {cert.params} gaining {cert.profit_gain:.6g}"
        )
    return verdict
