"""Quadrature, root finding and monotone-envelope primitives used by every solver."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize_scalar

from src.core.errors import BracketError, ConvergenceError, ParameterError, StructureError

logger = logging.getLogger(__name__)

# 17-point Gauss-Legendre is exact for polynomials of degree <= 33
GAUSS_ORDER = 17
MAX_DEGREE = 32
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_ORDER)

PolyLike = Union[Polynomial, Sequence[float]]
Segment = Tuple[Tuple[float, float], PolyLike]


@dataclass(frozen=True)
class Tolerance:
    """Solver tolerances."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not self.abs_tol > 0 or not self.rel_tol > 0:
            raise ParameterError("tolerances must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")

    def width(self, x: float) -> float:
        """Admissible half-width of a bracket centred at x."""
        return max(self.abs_tol, self.rel_tol * abs(x))


DEFAULT_TOLERANCE = Tolerance()
# nested solves: inner loops run tighter than the outer one
INNER_TOLERANCE = Tolerance(abs_tol=1e-11, rel_tol=1e-12, max_iter=200)


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise StructureError(f"bracket [{self.lo}, {self.hi}] is not finite")
        if self.lo > self.hi:
            raise StructureError(f"bracket [{self.lo}, {self.hi}] is reversed")


def _as_polynomial(p: PolyLike) -> Polynomial:
    if isinstance(p, Polynomial):
        return p
    return Polynomial(np.asarray(p, dtype=float))


def integrate_piecewise(segments: Sequence[Segment]) -> float:
    """Integrate a piecewise polynomial exactly.

    Each piece is integrated with a fixed-order Gauss-Legendre rule mapped onto its
    interval, which is exact up to rounding for degree <= 33.

    Args:
        segments: ordered ((lo, hi), polynomial) pairs; polynomials may be numpy
            Polynomial objects or ascending coefficient sequences.

    Returns:
        The integral over the union of the intervals.
    """
    total = 0.0
    prev_hi = -math.inf
    for (lo, hi), p in segments:
        if lo > hi:
            raise StructureError(f"segment [{lo}, {hi}] is reversed")
        if lo < -1e-12 or hi > 1.0 + 1e-12:
            raise StructureError(f"segment [{lo}, {hi}] leaves [0, 1]")
        if lo < prev_hi - 1e-12:
            raise StructureError(f"segment [{lo}, {hi}] overlaps or precedes [.., {prev_hi}]")
        prev_hi = hi
        poly = _as_polynomial(p)
        if poly.degree() > MAX_DEGREE:
            raise StructureError(f"degree {poly.degree()} exceeds {MAX_DEGREE}")
        if hi == lo:
            continue
        xm = 0.5 * (hi + lo)
        xr = 0.5 * (hi - lo)
        total += xr * float(np.dot(_WEIGHTS, poly(xm + xr * _NODES)))
    return total


def bisect_root(
    f: Callable[[float], float],
    bracket: Bracket,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> float:
    """Find a root of a monotone function by bisection.

    Args:
        f: function with f(lo) and f(hi) of opposite (or zero) sign.
        bracket: search interval.
        tol: stop once the half-width is below tol.width(mid).

    Returns:
        The midpoint of the final bracket (or an endpoint that is an exact root).
    """
    lo, hi = bracket.lo, bracket.hi
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo < 0.0) == (f_hi < 0.0):
        raise BracketError(
            f"f({lo})={f_lo:.3e} and f({hi})={f_hi:.3e} have the same sign", lo, hi, f_lo, f_hi
        )
    rising = f_lo < 0.0
    for _ in range(tol.max_iter):
        mid = 0.5 * (lo + hi)
        if 0.5 * (hi - lo) <= tol.width(mid):
            return mid
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0.0) == rising:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"bisection did not converge in {tol.max_iter} steps", (lo, hi))


def bisect_many(
    f: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> np.ndarray:
    """Vectorised sup{x in [lo, hi] : f(x) <= 0} for a non-decreasing f.

    Every lane must satisfy f(lo) <= 0; lanes with f(hi) <= 0 return hi. f is always called
    on full-length arrays, so closures may index per-lane data by position.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    active = ~(np.asarray(f(hi)) <= 0.0)
    if not active.any():
        return hi
    width = float(np.max((hi - lo)[active]))
    steps = max(1, int(math.ceil(math.log2(max(width, tol.abs_tol) / tol.abs_tol))) + 1)
    if steps > tol.max_iter:
        raise ConvergenceError(
            f"bracket width {width} needs {steps} halvings (max {tol.max_iter})", (0.0, width)
        )
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        below = np.asarray(f(mid)) <= 0.0
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
    return np.where(active, lo, hi)


def golden_section_min(
    f: Callable[[float], float],
    bracket: Bracket,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> Tuple[float, float]:
    """Bounded local minimisation of f on the bracket (golden section with parabolic steps).

    Returns (x, f(x)); the better endpoint wins when the interior minimum is worse.
    """
    lo, hi = bracket.lo, bracket.hi
    if hi <= lo:
        return lo, f(lo)
    res = minimize_scalar(
        f, bounds=(lo, hi), method="bounded", options={"xatol": tol.abs_tol, "maxiter": tol.max_iter}
    )
    best = min([(float(res.fun), float(res.x)), (f(lo), lo), (f(hi), hi)])
    return best[1], best[0]


def running_right_infimum(xs: Sequence[float], ys: Sequence[float]) -> np.ndarray:
    """Largest non-decreasing sequence pointwise <= ys: z[i] = min(ys[i:])."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size == 0 or y.size == 0:
        raise StructureError("running_right_infimum needs a non-empty sample")
    if x.shape != y.shape:
        raise StructureError(f"length mismatch: {x.size} abscissae, {y.size} values")
    if np.any(np.diff(x) <= 0.0):
        raise StructureError("abscissae must be strictly increasing")
    return np.minimum.accumulate(y[::-1])[::-1]
