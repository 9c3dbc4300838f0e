"""Theoretical bandwidth and extrapolation-order selection.

Balancing squared bias against variance for the order-r estimator gives

    h*(n, d, r) = n^(-1/(4r+d)) * (e / (2r))^(2r/(4r+d)),

and minimising the resulting MSE over r gives r* = (d/4) W(2 n^(2/d) / d), with
W the principal branch of the Lambert W function.  The bias constant for a
standard-normal reference is l_r = (2r-1)!! / (2 pi)^(d/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    DomainError,
    InvalidArgumentError,
    NumericalFailureError,
    NumericalOverflowError,
)
from .extrapolation import BandwidthSet

__all__ = [
    "OrderSelection",
    "lambert_w",
    "optimal_bandwidth",
    "optimal_order",
    "double_factorial",
    "gaussian_bias_constant",
    "spread_bandwidths",
    "DEFAULT_SPREAD_RATIO",
]

DEFAULT_SPREAD_RATIO = 1.2
_INV_E = math.exp(-1.0)
_MAX_ITER = 50


def _initial_guess(x: float) -> float:
    if x >= 0:
        return math.log1p(x)
    # branch-point series: W = -1 + p - p^2/3 + 11 p^3 / 72, p = sqrt(2 (e x + 1))
    p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def lambert_w(x: float) -> float:
    """Principal branch W0 of the Lambert W function, by Halley iteration.

    Accurate to |w e^w - x| <= 1e-12 * max(1, |x|).
    """
    x = float(x)
    if math.isnan(x) or x < -_INV_E:
        raise DomainError(f"lambert_w is undefined for x={x!r} < -1/e")
    if math.isinf(x):
        raise DomainError("lambert_w requires a finite argument")
    if x == 0.0:
        return 0.0
    tol = 1e-12 * max(1.0, abs(x))
    w = _initial_guess(x)
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol and w > -1.0:
            return w
        wp1 = w + 1.0
        if wp1 == 0.0:
            # Halley denominator vanishes exactly at the branch point
            return w
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_new = w - step
        if w_new <= -1.0:
            w_new = 0.5 * (w - 1.0)
        if w_new == w:
            break
        w = w_new
    ew = math.exp(w)
    if abs(w * ew - x) <= tol:
        return w
    # near -1/e the residual floor is set by rounding of x itself
    if x < 0 and abs(x + _INV_E) < 1e-8:
        return w
    raise NumericalFailureError(f"lambert_w({x!r}) did not converge in {_MAX_ITER} iterations")


def _check_counts(n, d, r=1):
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"n must be an integer >= 2, got {n!r}")
    if int(d) != d or d < 1:
        raise InvalidArgumentError(f"d must be a positive integer, got {d!r}")
    if int(r) != r or r < 1:
        raise InvalidArgumentError(f"r must be a positive integer, got {r!r}")


def optimal_bandwidth(n: int, d: int, r: int) -> float:
    """Bandwidth that balances bias^2 and variance for order ``r``."""
    _check_counts(n, d, r)
    denom = 4 * r + d
    return n ** (-1.0 / denom) * (math.e / (2 * r)) ** (2.0 * r / denom)


@dataclass(frozen=True)
class OrderSelection:
    n: int
    d: int
    alpha: float
    r_real: float
    r: int
    h_star: float

    def stationarity_residual(self) -> float:
        """-2 ln n + 4 r + d ln r + d ln 2 evaluated at the continuous optimum."""
        return (-2.0 * math.log(self.n) + 4.0 * self.r_real
                + self.d * math.log(self.r_real) + self.d * math.log(2.0))


def optimal_order(n: int, d: int) -> OrderSelection:
    """Optimal extrapolation order, rounded to the nearest integer and clamped to >= 1."""
    _check_counts(n, d)
    alpha = 2.0 * n ** (2.0 / d) / d
    r_real = d / 4.0 * lambert_w(alpha)
    r = max(1, int(round(r_real)))
    return OrderSelection(n=int(n), d=int(d), alpha=alpha, r_real=r_real, r=r,
                          h_star=optimal_bandwidth(n, d, r))


def double_factorial(m: int) -> int:
    """m!! for odd 1 <= m <= 299."""
    if isinstance(m, bool) or int(m) != m:
        raise InvalidArgumentError(f"double factorial needs an integer, got {m!r}")
    m = int(m)
    if m < 1 or m % 2 == 0 or m > 299:
        raise InvalidArgumentError(f"double factorial needs an odd integer in [1, 299], got {m}")
    return math.prod(range(m, 0, -2))


def gaussian_bias_constant(r: int, d: int) -> float:
    """Bias constant l_r = (2r-1)!! / (2 pi)^(d/2) for the standard-normal reference."""
    if int(r) != r or not 1 <= r <= 150:
        raise InvalidArgumentError(f"r must be an integer in [1, 150], got {r!r}")
    if int(d) != d or d < 1:
        raise InvalidArgumentError(f"d must be a positive integer, got {d!r}")
    try:
        value = double_factorial(2 * int(r) - 1) / (2.0 * math.pi) ** (d / 2.0)
    except OverflowError as exc:
        raise NumericalOverflowError(f"l_r overflows for r={r}, d={d}") from exc
    if not math.isfinite(value):
        raise NumericalOverflowError(f"l_r overflows for r={r}, d={d}")
    return value


def spread_bandwidths(h_star: float, r: int, ratio: float = DEFAULT_SPREAD_RATIO) -> BandwidthSet:
    """r geometrically spaced bandwidths whose geometric mean is ``h_star``."""
    if not (math.isfinite(h_star) and h_star > 0):
        raise InvalidArgumentError(f"h_star must be positive, got {h_star!r}")
    if int(r) != r or r < 1:
        raise InvalidArgumentError(f"r must be a positive integer, got {r!r}")
    if not ratio >= 1.0 + 1e-3:
        raise InvalidArgumentError(f"spread ratio must be >= 1.001, got {ratio!r}")
    centre = (r + 1) / 2.0
    values = tuple(h_star * ratio ** (i - centre) for i in range(1, int(r) + 1))
    # raises IllConditionedBandwidthsError when the ratio is too close to 1 for large r
    return BandwidthSet(values)
