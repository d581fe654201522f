"""Exponential integral and a safeguarded scalar root finder.

``exp_integral_e1`` uses the power series below x = 1 and the Lentz-evaluated
continued fraction above it, compiled as a numpy ufunc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import vectorize

from .errors import DomainError, NoConvergence, NoSignChange

EULER_GAMMA = 0.57721566490153286060651209

_SERIES_TERMS = 30
_CF_MAX_ITER = 300
_EPS = 1e-16
_TINY = 1e-300


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise DomainError(f"interval needs lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class RootConfig:
    abs_tol: float = 1e-14
    max_iter: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")


@vectorize(["float64(float64)"], cache=True)
def _e1(x):
    if x < 1.0:
        # E1(x) = -gamma - ln x - sum_{n>=1} (-x)^n / (n n!)
        total = 0.0
        term = 1.0
        for n in range(1, _SERIES_TERMS + 1):
            term *= -x / n
            total += term / n
        return -EULER_GAMMA - math.log(x) - total
    # modified Lentz evaluation of the continued fraction
    b = x + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_ITER + 1):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x)


def exp_integral_e1(x):
    """Exponential integral E1(x) = int_1^inf exp(-t x) / t dt for x > 0.

    Accepts a scalar or an array; returns the same shape. Results underflow to
    0.0 for x beyond roughly 700.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError("exp_integral_e1 requires finite x > 0")
    out = _e1(arr)
    return float(out) if arr.ndim == 0 else out


def solve_monotone_root(
    f: Callable[[float], float],
    bracket: Interval,
    cfg: RootConfig = RootConfig(),
) -> float:
    """Root of ``f`` inside ``bracket`` by bisection with secant acceleration.

    Every secant proposal is kept only if it falls strictly inside the current
    bracket; otherwise the step falls back to bisection. Stops when the bracket
    width drops to ``cfg.abs_tol`` or ``f`` hits zero exactly.
    """
    lo, hi = float(bracket.lo), float(bracket.hi)
    flo, fhi = float(f(lo)), float(f(hi))
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NoSignChange(f"no sign change on [{lo}, {hi}]: f={flo:g}, {fhi:g}")

    for it in range(cfg.max_iter):
        if hi - lo <= cfg.abs_tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # bracket is down to adjacent floats
            return mid
        # alternate secant and bisection so the bracket always halves at least every other step
        x = mid
        if it % 2 == 0 and fhi != flo:
            sec = hi - fhi * (hi - lo) / (fhi - flo)
            if lo < sec < hi:
                x = sec
        fx = float(f(x))
        if fx == 0.0:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
    if hi - lo <= cfg.abs_tol:
        return 0.5 * (lo + hi)
    raise NoConvergence(
        f"no convergence after {cfg.max_iter} iterations, bracket width {hi - lo:g}",
        result=0.5 * (lo + hi),
    )
