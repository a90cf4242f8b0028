"""Monotone wage schedules on [0, 1] and their generalized inverses."""

import logging
from dataclasses import dataclass
from typing import Any, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from src.core.errors import DomainError, ParameterError, StructureError

logger = logging.getLogger(__name__)

_KNOT_TOL = 1e-12


@dataclass(frozen=True)
class IRReport:
    """Individual-rationality verdict with the worst offending productivity."""

    ok: bool
    worst_v: float
    violation: float


@dataclass(frozen=True)
class WageFunction:
    """Piecewise-linear non-decreasing wage schedule.

    Knots are (v, w) pairs with v non-decreasing. A repeated v encodes a jump: the first
    knot at that v is the left limit, the last one the value. Evaluation is right-continuous.
    """

    vs: Tuple[float, ...]
    ws: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.vs) != len(self.ws) or not self.vs:
            raise StructureError("a wage function needs matching, non-empty knot lists")
        v = np.asarray(self.vs)
        w = np.asarray(self.ws)
        if abs(v[0]) > _KNOT_TOL or abs(v[-1] - 1.0) > _KNOT_TOL:
            raise StructureError(f"knots must span [0, 1], got [{v[0]}, {v[-1]}]")
        if np.any(np.diff(v) < 0.0):
            raise StructureError("knot productivities must be non-decreasing")
        if np.any(np.diff(w) < -_KNOT_TOL):
            raise StructureError("wages must be non-decreasing")
        if np.any(w < -_KNOT_TOL) or np.any(w > 1.0 + _KNOT_TOL):
            raise StructureError("wages must lie in [0, 1]")

    @classmethod
    def from_knots(cls, points: Iterable[Tuple[float, float]]) -> "WageFunction":
        """Normalise raw knots: clip to [0, 1], drop duplicates, keep the outer pair of each jump."""
        pts = [(min(max(float(v), 0.0), 1.0), min(max(float(w), 0.0), 1.0)) for v, w in points]
        if not pts:
            raise StructureError("a wage function needs at least one knot")
        if pts[0][0] > _KNOT_TOL:
            pts.insert(0, (0.0, pts[0][1]))
        if pts[-1][0] < 1.0 - _KNOT_TOL:
            pts.append((1.0, pts[-1][1]))
        groups: List[List[Tuple[float, float]]] = []
        for v, w in pts:
            if groups and abs(v - groups[-1][0][0]) <= _KNOT_TOL:
                groups[-1].append((groups[-1][0][0], w))
            else:
                groups.append([(v, w)])
        knots: List[Tuple[float, float]] = []
        for group in groups:
            first, last = group[0], group[-1]
            knots.append(first)
            if abs(last[1] - first[1]) > _KNOT_TOL:
                knots.append(last)
        # monotone repair of rounding noise only; real decreases are rejected in __post_init__
        ws = [knots[0][1]]
        for _, w in knots[1:]:
            ws.append(w if w >= ws[-1] or ws[-1] - w > _KNOT_TOL else ws[-1])
        vs = [v for v, _ in knots]
        vs[0], vs[-1] = 0.0, 1.0
        return cls(tuple(vs), tuple(ws))

    @property
    def knots(self) -> List[Tuple[float, float]]:
        return list(zip(self.vs, self.ws))

    @property
    def jumps(self) -> List[Tuple[float, float, float]]:
        """(v, left limit, value) for every discontinuity."""
        out = []
        for i in range(len(self.vs) - 1):
            if self.vs[i] == self.vs[i + 1]:
                out.append((self.vs[i], self.ws[i], self.ws[i + 1]))
        return out

    def __call__(self, v: Any) -> Any:
        return eval_wage(self, v)

    def pieces(self) -> List[Tuple[float, float, float, float]]:
        """Linear pieces (a, b, c0, c1) with w(v) = c0 + c1 * v on [a, b]."""
        out = []
        for (a, wa), (b, wb) in zip(self.knots[:-1], self.knots[1:]):
            if b <= a:
                continue
            c1 = (wb - wa) / (b - a)
            out.append((a, b, wa - c1 * a, c1))
        return out

    def to_list(self) -> List[List[float]]:
        return [[v, w] for v, w in self.knots]


def _check_domain(arr: np.ndarray) -> None:
    if np.any(arr < -_KNOT_TOL) or np.any(arr > 1.0 + _KNOT_TOL):
        raise DomainError(f"productivity outside [0, 1]: {arr[(arr < 0) | (arr > 1)][:3]}")


def eval_wage(w: WageFunction, v: Any) -> Any:
    """Right-continuous evaluation; linear between knots."""
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    _check_domain(arr)
    arr = np.clip(arr, 0.0, 1.0)
    vs = np.asarray(w.vs)
    ws = np.asarray(w.ws)
    idx = np.clip(np.searchsorted(vs, arr, side="right") - 1, 0, len(vs) - 1)
    nxt = np.minimum(idx + 1, len(vs) - 1)
    span = vs[nxt] - vs[idx]
    safe = np.where(span > 0.0, span, 1.0)
    t = np.where(span > 0.0, (arr - vs[idx]) / safe, 0.0)
    out = ws[idx] + t * (ws[nxt] - ws[idx])
    return float(out[0]) if np.ndim(v) == 0 else out


def left_limit(w: WageFunction, v: float) -> float:
    """Limit of w from the left at v (equals w(v) where w is continuous)."""
    if v < -_KNOT_TOL or v > 1.0 + _KNOT_TOL:
        raise DomainError(f"productivity {v} outside [0, 1]")
    vs = np.asarray(w.vs)
    i = int(np.searchsorted(vs, v, side="left"))
    if i < len(vs) and vs[i] == v:
        return float(w.ws[i])
    return float(eval_wage(w, v))


def generalized_inverse(w: WageFunction, eps: Any) -> Any:
    """sup{v : w(v) <= eps}, or 0 when the sublevel set is empty."""
    e = np.atleast_1d(np.asarray(eps, dtype=float))
    vs = np.asarray(w.vs)
    ws = np.asarray(w.ws)
    j = np.searchsorted(ws, e, side="right")
    out = np.empty_like(e)
    full = j >= len(ws)
    empty = j == 0
    mid = ~(full | empty)
    out[full] = 1.0
    out[empty] = 0.0
    if mid.any():
        jm = j[mid]
        v0, v1 = vs[jm - 1], vs[jm]
        w0, w1 = ws[jm - 1], ws[jm]
        # at a jump the sublevel set ends at the jump location
        rising = (v1 > v0) & (w1 > w0)
        t = np.where(rising, (e[mid] - w0) / np.where(w1 > w0, w1 - w0, 1.0), 0.0)
        out[mid] = np.where(rising, v0 + t * (v1 - v0), v1)
    return float(out[0]) if np.ndim(eps) == 0 else out


def individual_rationality_check(w: WageFunction, econ_tol: float = 1e-7) -> IRReport:
    """w(v) <= v + econ_tol on [0, 1); w - v is piecewise linear so its maximum sits on a knot."""
    vs = np.asarray(w.vs)
    gaps = np.asarray(w.ws) - vs
    # the value at v = 1 has measure zero and never counts
    interior = vs < 1.0
    if not interior.any():
        return IRReport(ok=True, worst_v=0.0, violation=0.0)
    candidates = gaps.copy()
    # the left limit at v = 1 is attained arbitrarily close to 1
    candidates[~interior] = -np.inf
    last_interior = int(np.flatnonzero(interior)[-1])
    if last_interior + 1 < len(vs):
        candidates[last_interior + 1] = gaps[last_interior + 1]
    k = int(np.argmax(candidates))
    violation = float(max(candidates[k], 0.0))
    return IRReport(ok=violation <= econ_tol, worst_v=float(vs[k]), violation=violation)


def max_shortfall(w: WageFunction) -> Tuple[float, float]:
    """(v, sup of v - w(v)) over [0, 1]; also piecewise linear, so a knot attains it."""
    vs = np.asarray(w.vs)
    short = vs - np.asarray(w.ws)
    k = int(np.argmax(short))
    return float(vs[k]), float(short[k])


def flatten_above(w: WageFunction, vbar: float) -> WageFunction:
    """w up to vbar, constant at w(vbar) afterwards."""
    if vbar < 0.0 or vbar > 1.0:
        raise DomainError(f"flattening point {vbar} outside [0, 1]")
    if vbar >= 1.0:
        return w
    level = float(eval_wage(w, vbar))
    kept = [(v, x) for v, x in w.knots if v <= vbar]
    kept.append((vbar, level))
    kept.append((1.0, level))
    return WageFunction.from_knots(kept)


def identity() -> WageFunction:
    return WageFunction((0.0, 1.0), (0.0, 1.0))


def zero() -> WageFunction:
    return WageFunction((0.0, 1.0), (0.0, 0.0))


def constant(c: float) -> WageFunction:
    if not 0.0 <= c <= 1.0:
        raise ParameterError(f"constant wage {c} outside [0, 1]")
    return WageFunction((0.0, 1.0), (float(c), float(c)))


def linear(slope: float) -> WageFunction:
    if not 0.0 <= slope <= 1.0:
        raise ParameterError(f"linear wage slope {slope} outside [0, 1]")
    return WageFunction((0.0, 1.0), (0.0, float(slope)))


def cap(delta: float) -> WageFunction:
    """min(v, delta)."""
    if not 0.0 <= delta <= 1.0:
        raise ParameterError(f"cap {delta} outside [0, 1]")
    return WageFunction.from_knots([(0.0, 0.0), (delta, delta), (1.0, delta)])


def threshold(delta_prime: float) -> WageFunction:
    """v * 1[v >= delta_prime]."""
    if not 0.0 <= delta_prime <= 1.0:
        raise ParameterError(f"threshold {delta_prime} outside [0, 1]")
    return WageFunction.from_knots(
        [(0.0, 0.0), (delta_prime, 0.0), (delta_prime, delta_prime), (1.0, 1.0)]
    )


def shifted(lam: float) -> WageFunction:
    """max(0, v - lam)."""
    if not 0.0 <= lam <= 1.0:
        raise ParameterError(f"shift {lam} outside [0, 1]")
    return WageFunction.from_knots([(0.0, 0.0), (lam, 0.0), (1.0, 1.0 - lam)])


def from_knots(points: Sequence[Sequence[float]]) -> WageFunction:
    return WageFunction.from_knots([(p[0], p[1]) for p in points])


_PARAM_KINDS = {
    "constant": constant,
    "linear": linear,
    "cap": cap,
    "threshold": threshold,
    "shifted": shifted,
}


def wage_from_descriptor(desc: Union[str, Mapping[str, Any]]) -> WageFunction:
    """Build a wage from {'kind': 'linear', 'slope': 0.5} or the short form 'linear:0.5'."""
    if isinstance(desc, str):
        kind, _, raw = desc.partition(":")
        kind = kind.strip().lower()
        if kind in ("identity", "zero"):
            return identity() if kind == "identity" else zero()
        if kind in _PARAM_KINDS:
            try:
                return _PARAM_KINDS[kind](float(raw))
            except ValueError as e:
                raise ParameterError(f"wage '{desc}' needs a numeric parameter") from e
        raise ParameterError(f"unknown wage kind '{kind}'")

    kind = str(desc.get("kind", "")).lower()
    if kind == "identity":
        return identity()
    if kind == "zero":
        return zero()
    if kind == "knots":
        return from_knots(desc.get("knots", []))
    if kind in _PARAM_KINDS:
        for key in ("value", "slope", "delta", "delta_prime", "lambda", "param"):
            if key in desc:
                return _PARAM_KINDS[kind](float(desc[key]))
        raise ParameterError(f"wage kind '{kind}' needs a parameter")
    raise ParameterError(f"unknown wage kind '{kind}'")
