"""Productivity distributions: piecewise-polynomial densities on [0, 1]."""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from src.core.errors import NormalizationError, ParameterError, StructureError
from src.core.numerics import integrate_piecewise

if TYPE_CHECKING:
    from src.core.market import Market

logger = logging.getLogger(__name__)

MAX_DENSITY_DEGREE = 31
ArrayLike = Union[float, Sequence[float], np.ndarray]


def _scalar_or_array(out: np.ndarray, like: Any) -> Any:
    if np.ndim(like) == 0:
        return float(out.reshape(-1)[0])
    return out


@dataclass(frozen=True)
class DensityPiece:
    """Density polynomial (ascending coefficients) on [lo, hi]."""

    lo: float
    hi: float
    coef: Tuple[float, ...]

    @property
    def poly(self) -> Polynomial:
        return Polynomial(np.asarray(self.coef, dtype=float))


@dataclass
class RegularityReport:
    strictly_positive: bool
    f_lower: float
    f_upper: float
    warnings: List[str] = field(default_factory=list)


class ProductivityDist:
    """Absolutely continuous productivity distribution with a piecewise-polynomial density.

    Pieces partition [0, 1]. Partial moments are evaluated through exact antiderivatives,
    so every CDF, mean and tail surplus is exact up to rounding.
    """

    def __init__(self, pieces: Sequence[DensityPiece], label: str = "custom"):
        if not pieces:
            raise StructureError("a distribution needs at least one piece")
        self.pieces: Tuple[DensityPiece, ...] = tuple(pieces)
        self.label = label
        self._validate_partition()
        self._polys = [p.poly for p in self.pieces]
        self._starts = np.array([p.lo for p in self.pieces])
        self._anti: Dict[int, Tuple[List[Polynomial], np.ndarray]] = {}

        total = integrate_piecewise([((p.lo, p.hi), poly) for p, poly in zip(self.pieces, self._polys)])
        if abs(total - 1.0) > 1e-10:
            raise NormalizationError(
                f"density of '{label}' integrates to {total:.12g} (deficit {1.0 - total:.3e})",
                deficit=1.0 - total,
            )
        self.f_lower, self.f_upper = self._extremes()
        if self.f_lower < -1e-12:
            raise ParameterError(f"density of '{label}' is negative (min {self.f_lower:.3e})")

    def _validate_partition(self) -> None:
        prev = 0.0
        for piece in self.pieces:
            if abs(piece.lo - prev) > 1e-12:
                raise StructureError(f"pieces leave a gap or overlap at {prev}")
            if not piece.hi > piece.lo:
                raise StructureError(f"piece [{piece.lo}, {piece.hi}] is empty or reversed")
            if len(piece.coef) - 1 > MAX_DENSITY_DEGREE:
                raise StructureError(f"density degree exceeds {MAX_DENSITY_DEGREE}")
            prev = piece.hi
        if abs(prev - 1.0) > 1e-12:
            raise StructureError(f"pieces end at {prev}, not 1")

    def _extremes(self) -> Tuple[float, float]:
        values = []
        for piece, poly in zip(self.pieces, self._polys):
            candidates = [piece.lo, piece.hi]
            if poly.degree() >= 2:
                for root in poly.deriv().roots():
                    if abs(root.imag) < 1e-12 and piece.lo < root.real < piece.hi:
                        candidates.append(float(root.real))
            values.extend(float(poly(c)) for c in candidates)
        return min(values), max(values)

    def __repr__(self) -> str:
        return f"ProductivityDist({self.label!r}, pieces={len(self.pieces)})"

    @property
    def breakpoints(self) -> np.ndarray:
        return np.append(self._starts, 1.0)

    def locate(self, v: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._starts, v, side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def poly_at(self, v: float) -> Polynomial:
        """Density polynomial of the piece containing v."""
        return self._polys[int(self.locate(np.array([v]))[0])]

    def pdf(self, v: ArrayLike) -> Any:
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        idx = self.locate(arr)
        out = np.zeros_like(arr)
        for i, poly in enumerate(self._polys):
            mask = idx == i
            if mask.any():
                out[mask] = poly(arr[mask])
        out[(arr < 0.0) | (arr > 1.0)] = 0.0
        return _scalar_or_array(out, v)

    def _antiderivatives(self, order: int) -> Tuple[List[Polynomial], np.ndarray]:
        cached = self._anti.get(order)
        if cached is None:
            mono = Polynomial([0.0] * order + [1.0])
            antis = [(mono * p).integ() for p in self._polys]
            offsets = np.zeros(len(antis))
            acc = 0.0
            for i, (piece, anti) in enumerate(zip(self.pieces, antis)):
                offsets[i] = acc - anti(piece.lo)
                acc += anti(piece.hi) - anti(piece.lo)
            cached = (antis, offsets)
            self._anti[order] = cached
        return cached

    def cumulative(self, order: int, x: ArrayLike) -> Any:
        """Partial moment from zero: the integral of v**order * f(v) over [0, x]."""
        if order < 0:
            raise ParameterError("moment order must be non-negative")
        arr = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), 0.0, 1.0)
        antis, offsets = self._antiderivatives(order)
        if len(antis) == 1:
            out = offsets[0] + antis[0](arr)
        else:
            idx = self.locate(arr)
            out = np.empty_like(arr)
            for i, anti in enumerate(antis):
                mask = idx == i
                if mask.any():
                    out[mask] = offsets[i] + anti(arr[mask])
        return _scalar_or_array(out, x)

    def cdf(self, v: ArrayLike) -> Any:
        return self.cumulative(0, v)

    def partial_moment(self, order: int, a: ArrayLike, b: ArrayLike) -> Any:
        return np.subtract(self.cumulative(order, b), self.cumulative(order, a))

    def linear_integral(self, a: ArrayLike, b: ArrayLike, c0: ArrayLike, c1: ArrayLike) -> Any:
        """Integral of (c0 + c1 * v) * f(v) over [a, b]."""
        return np.add(
            np.multiply(c0, self.partial_moment(0, a, b)),
            np.multiply(c1, self.partial_moment(1, a, b)),
        )

    def tail_surplus(self, a: ArrayLike, b: ArrayLike) -> Any:
        """Integral of (v - a) * f(v) over [a, b]; zero when b <= a."""
        a_arr = np.asarray(a, dtype=float)
        b_arr = np.maximum(np.asarray(b, dtype=float), a_arr)
        out = self.linear_integral(a_arr, b_arr, -a_arr, 1.0)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def mean(self) -> float:
        return float(self.cumulative(1, 1.0))


def make_uniform() -> ProductivityDist:
    return ProductivityDist([DensityPiece(0.0, 1.0, (1.0,))], label="uniform")


def make_power(k: int) -> ProductivityDist:
    """CDF v**k, density k * v**(k-1)."""
    if int(k) != k or k < 1:
        raise ParameterError(f"power exponent must be a positive integer, got {k}")
    k = int(k)
    if k - 1 > MAX_DENSITY_DEGREE:
        raise ParameterError(f"power exponent {k} exceeds {MAX_DENSITY_DEGREE + 1}")
    coef = tuple([0.0] * (k - 1) + [float(k)])
    return ProductivityDist([DensityPiece(0.0, 1.0, coef)], label=f"power({k})")


def make_step(breaks: Sequence[float], levels: Sequence[float]) -> ProductivityDist:
    """Piecewise-constant density with the given interior breakpoints."""
    edges = [0.0] + [float(b) for b in breaks] + [1.0]
    if len(levels) != len(edges) - 1:
        raise ParameterError(f"{len(breaks)} breaks need {len(breaks) + 1} levels, got {len(levels)}")
    if any(b >= c for b, c in zip(edges, edges[1:])):
        raise ParameterError("breaks must be strictly increasing inside (0, 1)")
    if any(level < 0 for level in levels):
        raise ParameterError("step levels must be non-negative")
    pieces = [DensityPiece(a, b, (float(level),)) for a, b, level in zip(edges, edges[1:], levels)]
    return ProductivityDist(pieces, label="step")


def make_poly(pieces: Sequence[Tuple[float, float, Sequence[float]]]) -> ProductivityDist:
    return ProductivityDist(
        [DensityPiece(float(lo), float(hi), tuple(float(c) for c in coef)) for lo, hi, coef in pieces],
        label="poly",
    )


def mixture(dists: Sequence[ProductivityDist], weights: Sequence[float]) -> ProductivityDist:
    """Convex combination of densities; weights are normalised to sum to one."""
    w = np.asarray(weights, dtype=float)
    if len(dists) != len(w) or len(dists) == 0:
        raise StructureError("mixture needs one weight per distribution")
    if np.any(w < 0) or w.sum() <= 0:
        raise ParameterError("mixture weights must be non-negative with a positive sum")
    w = w / w.sum()
    edges = np.unique(np.concatenate([d.breakpoints for d in dists]))
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 1e-15:
            continue
        mid = 0.5 * (a + b)
        poly = Polynomial([0.0])
        for weight, dist in zip(w, dists):
            poly = poly + weight * dist.poly_at(mid)
        pieces.append(DensityPiece(float(a), float(b), tuple(float(c) for c in poly.coef)))
    # absorb a dropped sliver into the neighbouring piece so the partition stays closed
    fixed = []
    prev = 0.0
    for piece in pieces:
        fixed.append(DensityPiece(prev, piece.hi, piece.coef))
        prev = piece.hi
    return ProductivityDist(fixed, label="mixture")


def pooled(market: "Market") -> ProductivityDist:
    """Pooled F = beta/(1+beta) F_A + 1/(1+beta) F_B."""
    beta = market.beta
    return mixture([market.dist_A, market.dist_B], [beta / (1.0 + beta), 1.0 / (1.0 + beta)])


def moment(dist: ProductivityDist, order: int) -> float:
    """Exact moment of the given order by Gauss-Legendre quadrature per piece."""
    if order < 0:
        raise ParameterError("moment order must be non-negative")
    mono = Polynomial([0.0] * order + [1.0])
    return integrate_piecewise([((p.lo, p.hi), mono * p.poly) for p in dist.pieces])


def regularity(dist: ProductivityDist, strict: bool = False) -> RegularityReport:
    """Report density bounds; warns (or raises in strict mode) when f is not bounded away from 0."""
    report = RegularityReport(
        strictly_positive=dist.f_lower > 0.0, f_lower=dist.f_lower, f_upper=dist.f_upper
    )
    if not report.strictly_positive:
        message = (
            f"density of '{dist.label}' reaches {dist.f_lower:.3g}; the positive lower bound "
            "assumed by the equilibrium results fails, and reported values stand for a slight "
            "perturbation of this distribution that restores it"
        )
        report.warnings.append(message)
        if strict:
            raise ParameterError(message)
        logger.warning(message)
    return report


def dist_from_descriptor(desc: Mapping[str, Any]) -> ProductivityDist:
    """Build a distribution from a scenario descriptor such as {'kind': 'power', 'k': 5}."""
    kind = str(desc.get("kind", "")).lower()
    if kind == "uniform":
        return make_uniform()
    if kind == "power":
        return make_power(desc.get("k", 1))
    if kind == "step":
        return make_step(desc.get("breaks", []), desc.get("levels", []))
    if kind == "poly":
        return make_poly([(p["lo"], p["hi"], p["coef"]) for p in desc.get("pieces", [])])
    raise ParameterError(f"unknown distribution kind '{kind}'")
