"""Distributed multi-level water-filling power control and its baselines.

For one CSI realization every transmitter k solves

    max_p  w_k T log(1 + p G_kk / (1 + I_k)) - p (sum_{j != k} m_j G_jk + gamma_k)

where ``G = L_cross * H2``, ``T`` is packets per nat per epoch, ``I_k`` the
interference at receiver k, and ``m_j`` the price receiver j broadcasts for
the interference it suffers. The weight ``w_k`` is J_k'(Q_k) for the proposed
scheme, 1 for the CSI-only baseline and Q_k for the queue-weighted baseline.
Power is capped at the level that would drain the remaining queue in one slot.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, NoConvergence
from .fluid_value import FluidValueTable, PairParams, eval_J_prime
from .network_model import ChannelState, NetworkConfig, PowerProfile, QueueState


class WeightMode(str, enum.Enum):
    FLUID = "FLUID"
    UNIT = "UNIT"
    QUEUE = "QUEUE"


class ControllerKind(str, enum.Enum):
    PROPOSED = "PROPOSED"
    TDMA = "TDMA"
    CSI_ONLY = "CSI_ONLY"
    QWTO = "QWTO"


_DEFAULT_MODE = {
    ControllerKind.PROPOSED: WeightMode.FLUID,
    ControllerKind.CSI_ONLY: WeightMode.UNIT,
    ControllerKind.QWTO: WeightMode.QUEUE,
    ControllerKind.TDMA: WeightMode.UNIT,
}


@dataclass(frozen=True)
class GameConfig:
    term_tol: float = 1e-8
    max_rounds: int = 200
    weight_mode: WeightMode = WeightMode.FLUID
    # step used once a round fails to shrink the update; breaks 2-cycles of the
    # plain best-response map while leaving its fixed points unchanged
    relaxation: float = 0.8

    def __post_init__(self):
        if not self.term_tol > 0:
            raise DomainError("term_tol must be positive")
        if self.max_rounds < 1:
            raise DomainError("max_rounds must be at least 1")
        if not 0.0 < self.relaxation <= 1.0:
            raise DomainError("relaxation must lie in (0, 1]")
        object.__setattr__(self, "weight_mode", WeightMode(self.weight_mode))


@dataclass(frozen=True)
class MessageSet:
    m: np.ndarray


@dataclass(frozen=True)
class GameResult:
    power: PowerProfile
    rounds: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class Controller:
    kind: ControllerKind
    tables: tuple | None = None
    game: GameConfig = field(default_factory=GameConfig)
    tdma_weight: float = 1.0

    def __post_init__(self):
        kind = ControllerKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ControllerKind.PROPOSED:
            if not self.tables:
                raise DomainError("PROPOSED controller needs one fluid table per pair")
            object.__setattr__(self, "tables", tuple(self.tables))
        if self.game.weight_mode is not _DEFAULT_MODE[kind] and kind is not ControllerKind.TDMA:
            object.__setattr__(self, "game", replace(self.game, weight_mode=_DEFAULT_MODE[kind]))

    def check_coverage(self, q_cap: float):
        if self.kind is ControllerKind.PROPOSED:
            short = [k for k, t in enumerate(self.tables) if t.q_hi < q_cap]
            if short:
                raise DomainError(f"fluid tables for pairs {short} do not cover q_cap={q_cap:g}")

    def weights(self, Q) -> np.ndarray:
        """Per-pair water-level weights at epoch-start queue lengths ``Q``."""
        Q = np.asarray(Q, dtype=float)
        mode = self.game.weight_mode
        if self.kind is ControllerKind.TDMA:
            return np.full(Q.shape, float(self.tdma_weight))
        if mode is WeightMode.UNIT:
            return np.ones_like(Q)
        if mode is WeightMode.QUEUE:
            return Q.copy()
        return np.array([eval_J_prime(t, q) for t, q in zip(self.tables, Q)])


def _service_per_nat(cfg: NetworkConfig) -> float:
    return cfg.tau * cfg.rate_scale


def waterfill_decoupled(weight: float, params: PairParams, h2_direct: float) -> float:
    """Single-link water-filling: (weight T / gamma - 1 / (L h2))^+."""
    g = params.L_direct * h2_direct
    if g <= 0:
        return 0.0
    level = weight * params.service_per_nat / params.gamma
    return max(level - 1.0 / g, 0.0)


def _interference(G, p):
    # I_k = sum_{j != k} p_j G_kj
    return G @ p - np.diag(G) * p


def compute_messages(weights, cfg: NetworkConfig, h: ChannelState, power: PowerProfile) -> MessageSet:
    """m_j = w_j T SINR_j / (total received power plus noise at receiver j)."""
    G = h.gains(cfg)
    p = np.asarray(power.p, dtype=float)
    w = np.asarray(weights, dtype=float)
    I = _interference(G, p)
    S = np.diag(G) * p
    upsilon = S / (1.0 + I)
    psi = 1.0 + I + S
    return MessageSet(m=w * _service_per_nat(cfg) * upsilon / psi)


def power_cap(cfg: NetworkConfig, g_direct, interference, q_remaining):
    """Power that would drain ``q_remaining`` packets within one slot."""
    per_slot = cfg.rate_scale * cfg.slot_duration
    # long queues push the cap to +inf, which is the intended "no cap"
    with np.errstate(over="ignore"):
        grow = np.expm1(np.asarray(q_remaining, dtype=float) / per_slot)
    g = np.asarray(g_direct, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        cap = np.where(g > 0, (1.0 + interference) * grow / np.where(g > 0, g, 1.0), 0.0)
    return np.where(np.asarray(q_remaining) > 0, cap, 0.0)


def _best_response_all(w, cfg, G, p, m, q_rem):
    T = _service_per_nat(cfg)
    gamma = cfg.vector("gamma")
    gkk = np.diag(G)
    I = _interference(G, p)
    # price paid by k: sum_{j != k} m_j G_jk
    price = G.T @ m - gkk * m + gamma
    with np.errstate(divide="ignore"):
        level = w * T / price - np.where(gkk > 0, (1.0 + I) / np.where(gkk > 0, gkk, 1.0), np.inf)
    level = np.maximum(level, 0.0)
    return np.minimum(level, power_cap(cfg, gkk, I, q_rem))


def best_response_power(k, weights, cfg: NetworkConfig, h: ChannelState, power: PowerProfile,
                        msgs: MessageSet, q_k: float) -> float:
    """Capped multi-level water-filling update for transmitter ``k``."""
    G = h.gains(cfg)
    p = np.asarray(power.p, dtype=float)
    w = np.asarray(weights, dtype=float)
    q_rem = np.zeros(cfg.K)
    q_rem[k] = q_k
    return float(_best_response_all(w, cfg, G, p, np.asarray(msgs.m, dtype=float), q_rem)[k])


def local_objective(k, weights, cfg: NetworkConfig, h: ChannelState, power: PowerProfile,
                    msgs: MessageSet) -> float:
    """Payoff f_k of transmitter ``k`` with the other players' powers and prices fixed."""
    G = h.gains(cfg)
    p = np.asarray(power.p, dtype=float)
    m = np.asarray(msgs.m, dtype=float)
    I = _interference(G, p)[k]
    price = float(G[:, k] @ m - G[k, k] * m[k]) + cfg.pairs[k].gamma
    rate = np.log1p(p[k] * G[k, k] / (1.0 + I))
    return float(weights[k] * _service_per_nat(cfg) * rate - p[k] * price)


def local_gradient(weights, cfg: NetworkConfig, h: ChannelState, power: PowerProfile,
                   msgs: MessageSet) -> np.ndarray:
    """d f_k / d p_k for every k, messages held fixed."""
    G = h.gains(cfg)
    p = np.asarray(power.p, dtype=float)
    m = np.asarray(msgs.m, dtype=float)
    gkk = np.diag(G)
    I = _interference(G, p)
    price = G.T @ m - gkk * m + cfg.vector("gamma")
    return np.asarray(weights) * _service_per_nat(cfg) * gkk / (1.0 + I + p * gkk) - price


def utility(k, weights, cfg: NetworkConfig, h: ChannelState, power: PowerProfile) -> float:
    """Per-CSI utility U_k = w_k T log(1 + SINR_k) - gamma_k p_k."""
    G = h.gains(cfg)
    p = np.asarray(power.p, dtype=float)
    I = _interference(G, p)[k]
    return float(weights[k] * _service_per_nat(cfg) * np.log1p(p[k] * G[k, k] / (1.0 + I))
                 - cfg.pairs[k].gamma * p[k])


def stationarity_residual(weights, cfg, h, power, q) -> float:
    """Projected-gradient residual max_k |p_k - clip(p_k + g_k, 0, p_up_k)|.

    Equals |g_k| in the interior and vanishes at a bound the gradient pushes
    against, so points a rounding error away from a bound are not penalised.
    """
    G = h.gains(cfg)
    p = np.asarray(power.p, dtype=float)
    msgs = compute_messages(weights, cfg, h, power)
    grad = local_gradient(weights, cfg, h, power, msgs)
    cap = power_cap(cfg, np.diag(G), _interference(G, p), np.asarray(q.Q, dtype=float))
    proj = p - np.clip(p + grad, 0.0, cap)
    return float(np.max(np.abs(proj))) if proj.size else 0.0


def initial_profile(weights, cfg: NetworkConfig, h: ChannelState, q: QueueState) -> np.ndarray:
    """Decoupled water-filling, capped with zero interference."""
    gkk = np.diag(h.gains(cfg))
    T = _service_per_nat(cfg)
    level = np.asarray(weights, dtype=float) * T / cfg.vector("gamma")
    with np.errstate(divide="ignore"):
        p = np.maximum(level - np.where(gkk > 0, 1.0 / np.where(gkk > 0, gkk, 1.0), np.inf), 0.0)
    return np.minimum(p, power_cap(cfg, gkk, np.zeros(cfg.K), np.asarray(q.Q, dtype=float)))


def solve_game(weights, cfg: NetworkConfig, h: ChannelState, q: QueueState,
               game: GameConfig = GameConfig()) -> GameResult:
    """Synchronous message passing and best responses until powers settle.

    Rounds take the full best response until one fails to shrink the update;
    from then on the step is ``game.relaxation`` of the way to it.

    ``q`` holds the queue left at this slot and sets each transmitter's cap.
    Raises :class:`NoConvergence` (with the :class:`GameResult` attached) when
    ``max_rounds`` runs out and the residual is above 10 * term_tol.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise DomainError("weights must be nonnegative")
    G = h.gains(cfg)
    q_rem = np.asarray(q.Q, dtype=float)
    p = initial_profile(w, cfg, h, q)
    converged = False
    rounds = 0
    step, prev = 1.0, np.inf
    while rounds < game.max_rounds:
        rounds += 1
        m = compute_messages(w, cfg, h, PowerProfile(p)).m
        p_new = _best_response_all(w, cfg, G, p, m, q_rem)
        delta = np.max(np.abs(p_new - p))
        if delta < game.term_tol:
            p = p_new
            converged = True
            break
        if delta >= prev:
            step = game.relaxation
        prev = delta
        p = p_new if step == 1.0 else p + step * (p_new - p)
    profile = PowerProfile(p)
    res = stationarity_residual(w, cfg, h, profile, q)
    result = GameResult(power=profile, rounds=rounds, residual=res, converged=converged)
    if not converged and res > 10 * game.term_tol:
        raise NoConvergence(f"no convergence in {rounds} rounds, residual {res:g}", result=result)
    return result


def tdma_controller(cfg: NetworkConfig, h: ChannelState, q: QueueState, weight: float = 1.0) -> PowerProfile:
    """Only the pair with the strongest direct gain transmits (lowest index on ties)."""
    G = h.gains(cfg)
    gkk = np.diag(G)
    k = int(np.argmax(gkk))
    p = np.zeros(cfg.K)
    Q = np.asarray(q.Q, dtype=float)
    if Q[k] > 0:
        level = waterfill_decoupled(weight, cfg.pairs[k], h.H2[k, k])
        p[k] = min(level, float(power_cap(cfg, gkk[k], 0.0, Q[k])))
    return PowerProfile(p)


def control(controller: Controller, weights, cfg: NetworkConfig, h: ChannelState, q: QueueState):
    """Power profile the controller applies in one slot."""
    if controller.kind is ControllerKind.TDMA:
        return tdma_controller(cfg, h, q, controller.tdma_weight)
    return solve_game(weights, cfg, h, q, controller.game).power
