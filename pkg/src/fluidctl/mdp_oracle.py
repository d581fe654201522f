"""Exact average-cost dynamic programming on small discretized instances.

The oracle works at epoch granularity with one fading draw per epoch: in
state Q the controller sees the channel atom H, picks powers from a finite
grid, serves ``T log(1 + SINR)`` packets (never more than queued), pays
``sum_k beta_k Q_k / (lam_k tau) + gamma_k p_k`` and then receives the
epoch's arrivals. Off-grid queue levels are split linearly between the two
neighbouring grid levels, which keeps the expected queue exact; levels above
the top of the grid saturate there. The split is applied to the post-service
queue and again after arrivals, so on unit-spaced grids with integer
arrivals only the service step is ever split.

Each Bellman sweep is organised around the post-decision value

    U(x) = E_A[V(x + A)],

so the minimisation over actions only needs U interpolated at the post-service
queue. Between greedy sweeps the solver runs a few policy-evaluation sweeps
with the current greedy policy, which converges to the same fixed point in far
fewer of the expensive minimisations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit, prange
from scipy import stats

from .errors import DomainError, NoConvergence, StateExplosion
from .fluid_value import FluidValueTable, build_fluid_table, eval_J, eval_J_prime
from .network_model import NetworkConfig

MAX_STATES = 1_000_000
_PROB_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteMdp:
    """Finite model of a K <= 2 interference network.

    ``channel_h2`` has shape (C, K, K) with probabilities ``channel_prob``;
    ``arrival_counts`` has shape (A, K) with probabilities ``arrival_prob``.
    ``service_per_nat`` is packets per epoch per nat of log(1 + SINR).
    """

    K: int
    queue_grid: tuple
    power_grid: tuple
    channel_h2: np.ndarray
    channel_prob: np.ndarray
    arrival_counts: np.ndarray
    arrival_prob: np.ndarray
    tau: float
    L_cross: np.ndarray
    service_per_nat: float
    queue_weight: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        if not 1 <= self.K <= 2:
            raise DomainError(f"the exact oracle handles K <= 2, got K={self.K}")
        qg = tuple(np.asarray(g, dtype=float) for g in self.queue_grid)
        pg = tuple(np.asarray(g, dtype=float) for g in self.power_grid)
        if len(qg) != self.K or len(pg) != self.K:
            raise DomainError("need one queue grid and one power grid per pair")
        for name, grids in (("queue", qg), ("power", pg)):
            for g in grids:
                if g.ndim != 1 or g.size < 1 or np.any(np.diff(g) <= 0) or g[0] != 0.0:
                    raise DomainError(f"{name} grids must start at 0 and be strictly increasing")
        n_states = int(np.prod([g.size for g in qg]))
        if n_states > MAX_STATES:
            raise StateExplosion(f"state explosion: {n_states} joint queue states > {MAX_STATES}")
        for name, p in (("channel", self.channel_prob), ("arrival", self.arrival_prob)):
            p = np.asarray(p)
            if np.any(p < 0) or abs(p.sum() - 1.0) > _PROB_TOL:
                raise DomainError(f"{name} atom probabilities must be nonnegative and sum to 1")
        if self.channel_h2.shape[1:] != (self.K, self.K):
            raise DomainError("channel atoms must be K x K")
        if self.arrival_counts.shape[1] != self.K:
            raise DomainError("arrival atoms must have K entries")
        object.__setattr__(self, "queue_grid", qg)
        object.__setattr__(self, "power_grid", pg)

    @property
    def shape(self) -> tuple:
        return tuple(g.size for g in self.queue_grid)

    @property
    def n_states(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_actions(self) -> int:
        return int(np.prod([g.size for g in self.power_grid]))

    def states(self) -> np.ndarray:
        """Joint queue levels, shape (n_states, K), in C order of ``shape``."""
        mesh = np.meshgrid(*self.queue_grid, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def stage_cost(self) -> np.ndarray:
        """Queue part of the per-epoch cost on the state grid, shape ``shape``."""
        return (self.states() @ self.queue_weight).reshape(self.shape)

    def action_powers(self) -> np.ndarray:
        """Power vector of every joint action, shape (n_actions, K)."""
        mesh = np.meshgrid(*self.power_grid, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def transition_matrix(self, policy: np.ndarray) -> np.ndarray:
        """Dense state-to-state kernel under ``policy`` (joint action per state and atom)."""
        tables = _Tables.build(self)
        N = self.n_states
        P = np.zeros((N, N))
        for s in range(N):
            i, j = divmod(s, tables.n2)
            for c in range(self.channel_prob.size):
                a = int(policy[c, i, j])
                post = _split_post(tables, i, j, tables.rates[c, a])
                for (pi, pj), w in post:
                    for arr, pa in zip(tables.arrival_maps, self.arrival_prob):
                        for (ni, wi) in arr[0][pi]:
                            for (nj, wj) in arr[1][pj]:
                                P[s, ni * tables.n2 + nj] += self.channel_prob[c] * w * pa * wi * wj
        return P


@dataclass
class MdpSolution:
    V: np.ndarray
    theta: float
    policy: np.ndarray = field(repr=False)
    span_residual: float
    sweeps: int = 0
    greedy_sweeps: int = 0


def exponential_atoms(n: int) -> np.ndarray:
    """Conditional means of Exp(1) over ``n`` equal-probability bins.

    Each atom carries weight 1/n; the atom mean is exactly 1.
    """
    if n < 1:
        raise DomainError("need at least one atom")
    edges = -np.log1p(-np.arange(n) / n)
    lo, hi = edges, np.append(edges[1:], np.inf)
    # E[h | lo < h < hi] = ((lo + 1) e^-lo - (hi + 1) e^-hi) / (e^-lo - e^-hi)
    with np.errstate(invalid="ignore"):
        top = np.where(np.isinf(hi), 0.0, (hi + 1.0) * np.exp(-hi))
    return ((lo + 1.0) * np.exp(-lo) - top) * n


def poisson_atoms(mean: float, tail: float = 1e-6):
    """Support and renormalized probabilities of Poisson(mean) cut at its 1 - tail quantile."""
    if mean <= 0:
        return np.array([0.0]), np.array([1.0])
    top = int(stats.poisson.ppf(1.0 - tail, mean))
    n = np.arange(top + 1)
    p = stats.poisson.pmf(n, mean)
    return n.astype(float), p / p.sum()


def default_power_grid(table: FluidValueTable, q_top: float, n: int) -> np.ndarray:
    """Zero plus ``n - 1`` geometric levels up to the fluid water level at ``q_top``."""
    prm = table.params
    p_max = eval_J_prime(table, q_top) * prm.service_per_nat / prm.gamma
    return np.concatenate([[0.0], np.geomspace(p_max / 100.0, p_max, n - 1)])


def build_discrete_mdp(
    cfg: NetworkConfig,
    queue_levels: int = 21,
    power_levels: int = 10,
    atoms_per_link: int = 10,
    arrival_tail: float = 1e-6,
    queue_grid=None,
    power_grid=None,
    arrival_atoms=None,
) -> DiscreteMdp:
    """Discretize ``cfg`` for the exact oracle.

    Queue grids default to ``queue_levels`` evenly spaced levels on
    [0, cfg.q_cap]. Power grids default to :func:`default_power_grid`. Channel
    atoms are the product of ``atoms_per_link`` exponential quantile atoms over
    all K*K links. ``arrival_atoms`` may be given as (counts (A, K), probs) to
    override the truncated Poisson product.
    """
    K = cfg.K
    if K > 2:
        raise DomainError(f"the exact oracle handles K <= 2, got K={K}")
    if queue_grid is None:
        n_states = queue_levels ** K
        if n_states > MAX_STATES:
            raise StateExplosion(f"state explosion: {n_states} joint queue states > {MAX_STATES}")
        queue_grid = [np.linspace(0.0, cfg.q_cap, queue_levels)] * K
    if power_grid is None:
        power_grid = []
        for prm, qg in zip(cfg.pairs, queue_grid):
            table = build_fluid_table(prm, float(qg[-1]) * 1.05 + 1.0)
            power_grid.append(default_power_grid(table, float(qg[-1]), power_levels))

    h = exponential_atoms(atoms_per_link)
    mesh = np.meshgrid(*([h] * (K * K)), indexing="ij")
    h2 = np.stack([m.ravel() for m in mesh], axis=1).reshape(-1, K, K)
    cprob = np.full(h2.shape[0], 1.0 / h2.shape[0])

    if arrival_atoms is None:
        per_pair = [poisson_atoms(p.arrivals_per_epoch, arrival_tail) for p in cfg.pairs]
        cmesh = np.meshgrid(*[s for s, _ in per_pair], indexing="ij")
        pmesh = np.meshgrid(*[p for _, p in per_pair], indexing="ij")
        counts = np.stack([m.ravel() for m in cmesh], axis=1)
        aprob = np.prod(np.stack([m.ravel() for m in pmesh], axis=1), axis=1)
    else:
        counts, aprob = arrival_atoms
        counts = np.asarray(counts, dtype=float).reshape(-1, K)
        aprob = np.asarray(aprob, dtype=float)

    lam_epoch = cfg.vector("lam") * cfg.tau
    return DiscreteMdp(
        K=K,
        queue_grid=tuple(queue_grid),
        power_grid=tuple(power_grid),
        channel_h2=h2,
        channel_prob=cprob,
        arrival_counts=counts,
        arrival_prob=aprob,
        tau=cfg.tau,
        L_cross=np.array(cfg.L_cross, dtype=float),
        service_per_nat=cfg.tau * cfg.rate_scale,
        queue_weight=cfg.vector("beta") / lam_epoch,
        gamma=cfg.vector("gamma"),
    )


# --- interpolation tables -------------------------------------------------------


def _locate(grid, x):
    """Lower grid index and weight of the upper neighbour for each x (saturating)."""
    x = np.clip(np.asarray(x, dtype=float), grid[0], grid[-1])
    idx = np.clip(np.searchsorted(grid, x, side="right") - 1, 0, grid.size - 1)
    w = np.zeros_like(x)
    inner = idx < grid.size - 1
    w[inner] = (x[inner] - grid[idx[inner]]) / (grid[idx[inner] + 1] - grid[idx[inner]])
    return idx, w


@dataclass
class _Tables:
    g1: np.ndarray
    g2: np.ndarray
    n1: int
    n2: int
    rates: np.ndarray       # (C, A, 2) packets served per epoch if the queue allows
    power_cost: np.ndarray  # (A,)
    arr_idx: list           # per pair: (n_atoms, n_k) lower index after arrival
    arr_w: list
    arrival_maps: list

    @classmethod
    def build(cls, mdp: DiscreteMdp):
        g1 = mdp.queue_grid[0]
        g2 = mdp.queue_grid[1] if mdp.K == 2 else np.zeros(1)
        acts = mdp.action_powers()
        G = mdp.L_cross[None, :, :] * mdp.channel_h2  # (C, K, K)
        direct = np.einsum("ckk->ck", G)[:, None, :] * acts[None, :, :]
        total = np.einsum("ckj,aj->cak", G, acts)
        sinr = direct / (1.0 + total - direct)
        rates = np.zeros((G.shape[0], acts.shape[0], 2))
        rates[:, :, : mdp.K] = mdp.service_per_nat * np.log1p(sinr)
        power_cost = acts @ mdp.gamma

        grids = [g1, g2]
        counts = np.zeros((mdp.arrival_counts.shape[0], 2))
        counts[:, : mdp.K] = mdp.arrival_counts
        arr_idx, arr_w, maps = [], [], []
        for k in range(2):
            idx, w = _locate(grids[k], grids[k][None, :] + counts[:, k : k + 1])
            arr_idx.append(idx)
            arr_w.append(w)
        for a in range(counts.shape[0]):
            maps.append(tuple(
                [_pairs(arr_idx[k][a, i], arr_w[k][a, i]) for i in range(grids[k].size)]
                for k in range(2)
            ))
        return cls(g1, g2, g1.size, g2.size, rates, power_cost, arr_idx, arr_w, maps)

    def post_decision(self, V, prob):
        """U = E_A V(x + A) on the grid, shape (n1, n2)."""
        Vp = np.pad(V, ((0, 1), (0, 1)), mode="edge")
        U = np.zeros_like(V)
        for a, pa in enumerate(prob):
            i, wi = self.arr_idx[0][a][:, None], self.arr_w[0][a][:, None]
            j, wj = self.arr_idx[1][a][None, :], self.arr_w[1][a][None, :]
            U += pa * ((1 - wi) * ((1 - wj) * Vp[i, j] + wj * Vp[i, j + 1])
                       + wi * ((1 - wj) * Vp[i + 1, j] + wj * Vp[i + 1, j + 1]))
        return U


def _pairs(idx, w):
    out = [(int(idx), 1.0 - float(w))]
    if w > 0:
        out.append((int(idx) + 1, float(w)))
    return [(i, p) for i, p in out if p > 0]


def _split_post(tables, i, j, rate):
    x1 = max(tables.g1[i] - rate[0], 0.0)
    x2 = max(tables.g2[j] - rate[1], 0.0)
    i1, w1 = _locate(tables.g1, [x1])
    i2, w2 = _locate(tables.g2, [x2])
    return [((a, b), pa * pb) for a, pa in _pairs(i1[0], w1[0]) for b, pb in _pairs(i2[0], w2[0])]


# --- compiled sweeps ------------------------------------------------------------


@njit(cache=True)
def _loc(grid, x):
    n = grid.shape[0]
    if x <= grid[0]:
        return 0, 0.0
    if x >= grid[n - 1]:
        return n - 1, 0.0
    lo, hi = 0, n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if grid[mid] <= x:
            lo = mid
        else:
            hi = mid
    return lo, (x - grid[lo]) / (grid[lo + 1] - grid[lo])


@njit(parallel=True, cache=True)
def _greedy_sweep(Up, g1, g2, rates, power_cost, best, arg):
    """best[c, i, j] = min_a power_cost[a] + U(post-service queue); arg holds the argmin."""
    C, A = rates.shape[0], rates.shape[1]
    n1, n2 = g1.shape[0], g2.shape[0]
    for c in prange(C):
        i1 = np.empty(n1, dtype=np.int64)
        w1 = np.empty(n1)
        i2 = np.empty(n2, dtype=np.int64)
        w2 = np.empty(n2)
        for i in range(n1):
            for j in range(n2):
                best[c, i, j] = np.inf
        for a in range(A):
            r1 = rates[c, a, 0]
            r2 = rates[c, a, 1]
            for i in range(n1):
                x = g1[i] - r1
                i1[i], w1[i] = _loc(g1, x if x > 0.0 else 0.0)
            for j in range(n2):
                x = g2[j] - r2
                i2[j], w2[j] = _loc(g2, x if x > 0.0 else 0.0)
            pc = power_cost[a]
            for i in range(n1):
                a1, b1 = i1[i], w1[i]
                for j in range(n2):
                    a2, b2 = i2[j], w2[j]
                    v = pc + (1.0 - b1) * ((1.0 - b2) * Up[a1, a2] + b2 * Up[a1, a2 + 1]) \
                        + b1 * ((1.0 - b2) * Up[a1 + 1, a2] + b2 * Up[a1 + 1, a2 + 1])
                    if v < best[c, i, j]:
                        best[c, i, j] = v
                        arg[c, i, j] = a


@njit(parallel=True, cache=True)
def _policy_sweep(Up, g1, g2, rates, power_cost, policy, out):
    C = rates.shape[0]
    n1, n2 = g1.shape[0], g2.shape[0]
    for c in prange(C):
        for i in range(n1):
            for j in range(n2):
                a = policy[c, i, j]
                x = g1[i] - rates[c, a, 0]
                a1, b1 = _loc(g1, x if x > 0.0 else 0.0)
                x = g2[j] - rates[c, a, 1]
                a2, b2 = _loc(g2, x if x > 0.0 else 0.0)
                out[c, i, j] = power_cost[a] + (1.0 - b1) * ((1.0 - b2) * Up[a1, a2] + b2 * Up[a1, a2 + 1]) \
                    + b1 * ((1.0 - b2) * Up[a1 + 1, a2] + b2 * Up[a1 + 1, a2 + 1])


class _Operator:
    """Bellman operator pieces shared by the solver and the residual check."""

    def __init__(self, mdp: DiscreteMdp):
        self.mdp = mdp
        self.t = _Tables.build(mdp)
        self.stage = mdp.stage_cost().reshape(self.t.n1, self.t.n2)
        C = mdp.channel_prob.size
        self.buf = np.empty((C, self.t.n1, self.t.n2))
        self.arg = np.zeros((C, self.t.n1, self.t.n2), dtype=np.int64)

    def _Up(self, V):
        return np.pad(self.t.post_decision(V, self.mdp.arrival_prob), ((0, 1), (0, 1)), mode="edge")

    def greedy(self, V):
        t = self.t
        _greedy_sweep(self._Up(V), t.g1, t.g2, t.rates, t.power_cost, self.buf, self.arg)
        TV = self.stage + np.tensordot(self.mdp.channel_prob, self.buf, axes=1)
        return TV, self.arg.copy()

    def evaluate(self, V, policy):
        t = self.t
        _policy_sweep(self._Up(V), t.g1, t.g2, t.rates, t.power_cost, policy, self.buf)
        return self.stage + np.tensordot(self.mdp.channel_prob, self.buf, axes=1)


def _shape_out(mdp, V):
    return V.reshape(mdp.shape)


def relative_value_iteration(
    mdp: DiscreteMdp,
    tol: float = 1e-8,
    max_sweeps: int = 20000,
    eval_sweeps: int = 20,
    V0=None,
) -> MdpSolution:
    """Relative value iteration anchored at the empty state.

    Stops when the span of ``TV - V`` for the full (minimising) operator drops
    below ``tol``. ``eval_sweeps`` policy-evaluation sweeps with the current
    greedy policy follow every minimising sweep; 0 gives plain value
    iteration. ``V0`` optionally warm-starts the iteration.
    """
    if not tol > 0 or max_sweeps < 1:
        raise DomainError("need tol > 0 and max_sweeps >= 1")
    op = _Operator(mdp)
    n1, n2 = op.t.n1, op.t.n2
    V = np.zeros((n1, n2)) if V0 is None else np.array(V0, dtype=float).reshape(n1, n2)
    V = V - V[0, 0]
    sweeps = greedy = 0
    span = math.inf
    while sweeps < max_sweeps:
        TV, policy = op.greedy(V)
        sweeps += 1
        greedy += 1
        diff = TV - V
        span = float(diff.max() - diff.min())
        if span < tol:
            theta = 0.5 * float(diff.max() + diff.min())
            return MdpSolution(V=_shape_out(mdp, V), theta=theta, policy=policy,
                               span_residual=span, sweeps=sweeps, greedy_sweeps=greedy)
        V = TV - TV[0, 0]
        for _ in range(min(eval_sweeps, max_sweeps - sweeps)):
            TV = op.evaluate(V, policy)
            sweeps += 1
            V = TV - TV[0, 0]
    raise NoConvergence(f"relative value iteration: span {span:g} after {sweeps} sweeps")


def bellman_residual(mdp: DiscreteMdp, sol: MdpSolution) -> float:
    """max over states of |theta + V - T V| with the minimising operator T."""
    op = _Operator(mdp)
    V = np.asarray(sol.V, dtype=float).reshape(op.t.n1, op.t.n2)
    TV, _ = op.greedy(V)
    return float(np.max(np.abs(sol.theta + V - TV)))


def policy_powers(mdp: DiscreteMdp, sol: MdpSolution) -> np.ndarray:
    """Power-grid index per (channel atom, state..., pair)."""
    sizes = [g.size for g in mdp.power_grid]
    idx = np.stack(np.unravel_index(sol.policy, sizes), axis=-1)
    return idx.reshape(sol.policy.shape[:1] + mdp.shape + (mdp.K,))


# --- comparisons with the fluid approximation ----------------------------------


@dataclass(frozen=True)
class GapReport:
    norm: np.ndarray
    gap: np.ndarray
    rel_gap: np.ndarray
    bin_edges: np.ndarray
    bin_rel_gap: np.ndarray

    @property
    def first_bin(self) -> float:
        return float(self.bin_rel_gap[0])

    @property
    def last_bin(self) -> float:
        return float(self.bin_rel_gap[-1])


def fluid_sum(mdp: DiscreteMdp, tables) -> np.ndarray:
    states = mdp.states()
    total = np.zeros(states.shape[0])
    for k, table in enumerate(tables):
        total += eval_J(table, states[:, k])
    return total.reshape(mdp.shape)


def approximation_gap(mdp: DiscreteMdp, sol: MdpSolution, tables, n_bins: int = 10) -> GapReport:
    """V(Q) - sum_k J_k(Q_k) and its relative size, binned by ||Q|| quantiles.

    The empty state is excluded from the bins; each bin reports the mean of
    |gap| / max(1, V) over the states whose Euclidean norm falls in it.
    """
    if len(tables) != mdp.K:
        raise DomainError("need one fluid table per pair")
    V = np.asarray(sol.V, dtype=float)
    gap = V - fluid_sum(mdp, tables)
    rel = np.abs(gap) / np.maximum(1.0, V)
    norm = np.linalg.norm(mdp.states(), axis=1).reshape(mdp.shape)
    nz = norm.ravel() > 0
    n, r = norm.ravel()[nz], rel.ravel()[nz]
    edges = np.quantile(n, np.linspace(0.0, 1.0, n_bins + 1))
    which = np.clip(np.searchsorted(edges, n, side="right") - 1, 0, n_bins - 1)
    binned = np.array([r[which == b].mean() if np.any(which == b) else np.nan for b in range(n_bins)])
    return GapReport(norm=norm, gap=gap, rel_gap=rel, bin_edges=edges, bin_rel_gap=binned)


@dataclass(frozen=True)
class CouplingReport:
    couplings: np.ndarray
    errors: np.ndarray
    slope: float
    intercept: float
    e_zero: float
    monotone: bool
    solutions: tuple = field(repr=False, default=())


def _with_cross(cfg: NetworkConfig, L: float) -> NetworkConfig:
    M = np.full((cfg.K, cfg.K), float(L))
    np.fill_diagonal(M, cfg.vector("L_direct"))
    return NetworkConfig(pairs=cfg.pairs, L_cross=M, slots_per_epoch=cfg.slots_per_epoch,
                         q_cap=cfg.q_cap, rng_seed=cfg.rng_seed)


def coupling_sweep(cfg: NetworkConfig, couplings=(0.01, 0.02, 0.04, 0.08), tol: float = 1e-8,
                   **grid_kw) -> CouplingReport:
    """e(L) = max_Q |V_L(Q) - V_0(Q)| over cross gains L and its log-log slope.

    Every sweep point reuses the grids of the decoupled instance, so the only
    thing that changes is the cross gain.
    """
    if cfg.K != 2:
        raise DomainError("coupling_sweep needs K = 2")
    couplings = np.asarray(couplings, dtype=float)
    if couplings.size < 2 or np.any(couplings <= 0):
        raise DomainError("need at least two positive coupling values")
    base_mdp = build_discrete_mdp(_with_cross(cfg, 0.0), **grid_kw)
    base = relative_value_iteration(base_mdp, tol=tol)
    # e(0): the decoupled instance rebuilt and re-solved through the same warm-started path
    again = relative_value_iteration(
        build_discrete_mdp(_with_cross(cfg, 0.0), power_grid=base_mdp.power_grid, **grid_kw),
        tol=tol, V0=base.V)
    e_zero = float(np.max(np.abs(again.V - base.V)))
    errors, sols = [], [base]
    for L in couplings:
        mdp = build_discrete_mdp(_with_cross(cfg, L), power_grid=base_mdp.power_grid, **grid_kw)
        sol = relative_value_iteration(mdp, tol=tol, V0=base.V)
        sols.append(sol)
        errors.append(float(np.max(np.abs(sol.V - base.V))))
    errors = np.array(errors)
    slope, intercept = np.polyfit(np.log(couplings), np.log(errors), 1)
    return CouplingReport(couplings=couplings, errors=errors, slope=float(slope),
                          intercept=float(intercept), e_zero=e_zero,
                          monotone=bool(np.all(np.diff(errors) >= 0)), solutions=tuple(sols))


def write_solution_csv(mdp: DiscreteMdp, sol: MdpSolution, path) -> None:
    """One row per joint state: ``q1,q2,V`` (``q2`` is 0 for a single pair)."""
    states = mdp.states()
    V = np.asarray(sol.V).ravel()
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q1", "q2", "V"])
        for s, v in zip(states, V):
            w.writerow([repr(float(s[0])), repr(float(s[1]) if mdp.K == 2 else 0.0), repr(float(v))])
