"""Per-flow fluid value function of a single Tx-Rx pair.

The decoupled per-pair HJB equation has a closed-form solution in parametric
form: both the queue length ``q`` and the value ``J`` are explicit functions of
the slope ``y = J'(q)``. This module tabulates that curve on its increasing
branch and evaluates ``J`` and ``J'`` at arbitrary queue lengths.

Units. ``PairParams.lam`` is packets per second and ``tau`` is seconds. The
fluid dynamics run in epoch time: arrivals per epoch are ``lam * tau`` and one
nat of log(1 + SINR) carries ``tau * rate_scale`` packets per epoch. The delay
cost weight ``beta`` multiplies queue length divided by arrivals per epoch.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import DomainError, InfeasibleLoad, NonMonotoneBranch, OutOfRange
from .special_math import Interval, RootConfig, exp_integral_e1, solve_monotone_root

# E1(u) for u in [_U_MIN, _U_MAX] spans roughly [0, 229]; outside it the steady
# state either needs an astronomically large water level or is numerically zero.
_U_MIN = 1e-100
_U_MAX = 700.0
_ROOT_CFG = RootConfig(abs_tol=1e-15, max_iter=400)


@dataclass(frozen=True)
class PairParams:
    lam: float
    gamma: float
    beta: float = 1.0
    L_direct: float = 1.0
    tau: float = 1.0
    rate_scale: float = 1.0

    def __post_init__(self):
        for name in ("lam", "gamma", "beta", "L_direct", "tau", "rate_scale"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise DomainError(f"PairParams.{name} must be finite and > 0, got {val}")

    @property
    def arrivals_per_epoch(self) -> float:
        return self.lam * self.tau

    @property
    def service_per_nat(self) -> float:
        """Packets carried per epoch by one nat of spectral efficiency."""
        return self.tau * self.rate_scale

    @property
    def a(self) -> float:
        return self.service_per_nat * self.L_direct / self.gamma

    @property
    def prefactor(self) -> float:
        return self.arrivals_per_epoch * self.service_per_nat / self.beta


@dataclass(frozen=True)
class SteadyState:
    v: float
    c_inf: float


def solve_steady_state(params: PairParams) -> SteadyState:
    """Slope ``v`` of J at an empty queue and the average-cost offset ``c_inf``.

    ``v`` balances the mean water-filling rate against the arrival rate,
    E1(1/(a v)) * service_per_nat = arrivals_per_epoch.
    """
    target = params.arrivals_per_epoch / params.service_per_nat
    e1_hi = exp_integral_e1(_U_MIN)
    if target >= e1_hi:
        raise InfeasibleLoad(
            f"infeasible load: arrivals/service ratio {target:g} exceeds attainable {e1_hi:g}"
        )
    if target <= exp_integral_e1(_U_MAX):
        raise InfeasibleLoad(f"infeasible load: arrival ratio {target:g} underflows")

    # E1 is decreasing; solve in log u for uniform relative precision
    def g(t):
        return exp_integral_e1(math.exp(t)) - target

    t = solve_monotone_root(g, Interval(math.log(_U_MIN), math.log(_U_MAX)), _ROOT_CFG)
    u = math.exp(t)
    # one Newton polish step on u directly
    u -= (exp_integral_e1(u) - target) / (-math.exp(-u) / u)
    v = 1.0 / (params.a * u)
    T = params.service_per_nat
    c_inf = v * T * math.exp(-u) - (params.gamma / params.L_direct) * exp_integral_e1(u)
    return SteadyState(v=v, c_inf=c_inf)


def _x_of(params, y):
    return 1.0 / (params.a * np.asarray(y, dtype=float))


def q_of_y(params: PairParams, steady: SteadyState, y):
    """Queue length on the parametric curve at slope ``y``."""
    a, T = params.a, params.service_per_nat
    ratio = params.arrivals_per_epoch / T
    y = np.asarray(y, dtype=float)
    x = _x_of(params, y)
    e1 = exp_integral_e1(x)
    inner = (1.0 / a + y) * e1 - ratio * y - np.exp(-x) * y + steady.c_inf / T
    return params.prefactor * inner


def dq_dy(params: PairParams, y):
    x = _x_of(params, y)
    return params.prefactor * (exp_integral_e1(x) - params.arrivals_per_epoch / params.service_per_nat)


def j_raw_of_y(params: PairParams, y):
    """Parametric value at slope ``y`` before the boundary constant is added."""
    a = params.a
    ratio = params.arrivals_per_epoch / params.service_per_nat
    y = np.asarray(y, dtype=float)
    x = _x_of(params, y)
    e1 = exp_integral_e1(x)
    inner = (
        (1.0 - a * y) / (4.0 * a) * y * np.exp(-x)
        - 0.5 * ratio * y * y
        + (0.5 * y * y - 1.0 / (4.0 * a * a)) * e1
    )
    return params.prefactor * inner


@dataclass(frozen=True)
class FluidValueTable:
    params: PairParams
    steady: SteadyState
    y0: float
    b: float
    y: np.ndarray
    q: np.ndarray
    J: np.ndarray
    q_max: float
    _j_spline: CubicHermiteSpline = field(init=False, repr=False, compare=False)
    _y_guess: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("y", "q", "J"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (np.all(np.diff(self.q) > 0) and np.all(np.diff(self.y) > 0)):
            raise NonMonotoneBranch("tabulated q(y) is not strictly increasing")
        # dJ/dq = y exactly, so a Hermite spline reproduces slopes at every knot
        object.__setattr__(self, "_j_spline", CubicHermiteSpline(self.q, self.J, self.y))
        object.__setattr__(self, "_y_guess", PchipInterpolator(self.q, self.y))

    @property
    def samples(self):
        return list(zip(self.y.tolist(), self.q.tolist(), self.J.tolist()))

    @property
    def q_hi(self) -> float:
        return float(self.q[-1])

    def _check_range(self, q):
        q = np.asarray(q, dtype=float)
        if np.any(~np.isfinite(q)) or np.any(q < 0) or np.any(q > self.q_hi):
            raise OutOfRange(f"queue length outside tabulated range [0, {self.q_hi:g}]")
        return q


def build_fluid_table(params: PairParams, q_max: float, n_points: int = 4096) -> FluidValueTable:
    """Tabulate (y, q, J) on a geometric y-grid from y0 until q(y) >= q_max.

    ``y0`` is where q touches zero. q(y) has a double root there (its
    minimum), so ``y0`` is located as the sign change of dq/dy rather than of
    q itself; the boundary constant is then ``b = -J_raw(y0)``.
    """
    if not (math.isfinite(q_max) and q_max > 0):
        raise DomainError("q_max must be finite and positive")
    if n_points < 8:
        raise DomainError("n_points must be at least 8")
    steady = solve_steady_state(params)

    def slope(t):
        return float(dq_dy(params, math.exp(t)))

    lv = math.log(steady.v)
    t0 = solve_monotone_root(slope, Interval(lv - 1.0, lv + 1.0), _ROOT_CFG)
    y0 = math.exp(t0)
    b = -float(j_raw_of_y(params, y0))

    y_hi = 2.0 * y0
    for _ in range(200):
        if float(q_of_y(params, steady, y_hi)) >= q_max:
            break
        y_hi *= 2.0
    else:
        raise NonMonotoneBranch(f"q(y) never reaches q_max={q_max:g}")

    def reach(t):
        return float(q_of_y(params, steady, math.exp(t))) - q_max

    y_max = math.exp(
        solve_monotone_root(reach, Interval(math.log(y_hi / 2.0), math.log(y_hi)), _ROOT_CFG)
    )
    y_max = max(y_max, y0 * (1.0 + 2e-6)) * (1.0 + 1e-12)
    ys = np.concatenate(([y0], np.geomspace(y0 * (1.0 + 1e-6), y_max, n_points - 1)))
    qs = q_of_y(params, steady, ys)
    Js = j_raw_of_y(params, ys) + b
    qs[0] = 0.0
    Js[0] = 0.0
    if np.any(np.diff(qs) <= 0):
        raise NonMonotoneBranch("non-monotone branch: q(y) not increasing past y0")
    if np.any(np.diff(Js) <= 0):
        raise NonMonotoneBranch("non-monotone branch: J not increasing in q")
    return FluidValueTable(params=params, steady=steady, y0=y0, b=b, y=ys, q=qs, J=Js, q_max=float(q_max))


def eval_J(table: FluidValueTable, q):
    """Fluid value at queue length ``q`` (scalar or array), 0 <= q <= table range."""
    qa = table._check_range(q)
    out = table._j_spline(qa)
    return float(out) if out.ndim == 0 else out


def eval_J_prime(table: FluidValueTable, q, newton_steps: int = 3):
    """Slope J'(q), i.e. the y solving q(y) = q on the tabulated branch.

    A monotone interpolant of y over q gives the starting point; a few
    bracketed Newton steps on the closed form then invert q(y) to near
    machine precision.
    """
    qa = table._check_range(q)
    scalar = qa.ndim == 0
    qa = np.atleast_1d(qa)
    idx = np.clip(np.searchsorted(table.q, qa, side="right") - 1, 0, len(table.q) - 2)
    lo = table.y[idx]
    hi = table.y[idx + 1]
    y = np.clip(table._y_guess(qa), lo, hi)
    live = qa > 0
    if np.any(live):
        yl, ql, lol, hil = y[live], qa[live], lo[live], hi[live]
        for _ in range(newton_steps):
            resid = q_of_y(table.params, table.steady, yl) - ql
            d = dq_dy(table.params, yl)
            step = np.where(d > 0, resid / np.where(d > 0, d, 1.0), 0.0)
            yl = np.clip(yl - step, lol, hil)
        y[live] = yl
    y[~live] = table.y0
    return float(y[0]) if scalar else y


def hjb_residual(table: FluidValueTable, q):
    """Per-flow HJB residual at ``q`` (cost per epoch) with J' taken from the table."""
    qa = table._check_range(q)
    if np.any(qa <= 0):
        raise OutOfRange("hjb_residual needs q > 0")
    yp = np.asarray(eval_J_prime(table, qa), dtype=float)
    res = hjb_residual_at_slope(table.params, table.steady, qa, yp)
    return float(res) if np.ndim(res) == 0 else res


def hjb_residual_at_slope(params: PairParams, steady: SteadyState, q, y):
    """Same residual with an explicit slope ``y`` in place of the tabulated J'(q).

    With water-filling power (y T / gamma - 1 / (L h))^+ substituted, the
    minimised Hamiltonian per epoch is

        beta q / (lam tau) + T y exp(-x) - (gamma / L) E1(x) + y (lam tau - T E1(x)),

    x = 1 / (a y); the residual subtracts ``c_inf`` and is in cost units.
    """
    T = params.service_per_nat
    y = np.asarray(y, dtype=float)
    x = 1.0 / (params.a * y)
    e1 = exp_integral_e1(x)
    lam_epoch = params.arrivals_per_epoch
    return (
        params.beta * np.asarray(q, dtype=float) / lam_epoch
        - steady.c_inf
        + T * y * np.exp(-x)
        - (params.gamma / params.L_direct) * e1
        + y * (lam_epoch - T * e1)
    )


def write_table_csv(table: FluidValueTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y", "q", "J"])
        for yv, qv, jv in zip(table.y, table.q, table.J):
            w.writerow([repr(float(yv)), repr(float(qv)), repr(float(jv))])


def read_table_csv(path, params: PairParams, q_max: float | None = None) -> FluidValueTable:
    """Load samples written by :func:`write_table_csv` for the given pair."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["y", "q", "J"]:
        raise DomainError(f"{path}: expected header y,q,J")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    steady = solve_steady_state(params)
    y0 = float(data[0, 0])
    return FluidValueTable(
        params=params,
        steady=steady,
        y0=y0,
        b=-float(j_raw_of_y(params, y0)),
        y=data[:, 0],
        q=data[:, 1],
        J=data[:, 2],
        q_max=float(q_max if q_max is not None else data[-1, 1]),
    )
