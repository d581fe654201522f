"""K-pair interference network: configuration, randomness, dynamics and cost.

Conventions
-----------
* ``H2[k, j]`` is the squared fading magnitude from transmitter j to receiver k,
  i.i.d. Exp(1) per slot. ``L_cross[k, j]`` is the matching long-term path gain.
* Rates are log(1 + SINR) in nats scaled by ``rate_scale`` to packets/second.
* Streams: every (replication, pair, purpose) gets its own numpy Generator
  derived from the master seed via ``SeedSequence(seed, spawn_key=...)``.
  Channel row k (everything received at receiver k) comes from the pair-k
  channel stream; pair k's arrivals come from the pair-k arrival stream.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .errors import DomainError, Overdraft
from .fluid_value import PairParams

CHANNEL = 0
ARRIVAL = 1

# 10 MHz of bandwidth carrying 30 kbit packets, per nat of spectral efficiency
REFERENCE_RATE_SCALE = 10e6 / (30e3 * np.log(2.0))

_OVERDRAFT_TOL = 1e-9


@dataclass(frozen=True)
class NetworkConfig:
    pairs: tuple
    L_cross: np.ndarray
    slots_per_epoch: int = 10
    q_cap: float = 200.0
    rng_seed: int = 0

    def __post_init__(self):
        pairs = tuple(self.pairs)
        object.__setattr__(self, "pairs", pairs)
        K = len(pairs)
        if K < 1:
            raise DomainError("need at least one Tx-Rx pair")
        L = np.array(self.L_cross, dtype=float)
        if L.shape != (K, K):
            raise DomainError(f"L_cross must be {K}x{K}, got {L.shape}")
        if np.any(~np.isfinite(L)) or np.any(L < 0):
            raise DomainError("L_cross entries must be finite and nonnegative")
        for k, p in enumerate(pairs):
            if L[k, k] != p.L_direct:
                raise DomainError(
                    f"invariant violated: L_cross[{k}][{k}]={L[k, k]} != pairs[{k}].L_direct={p.L_direct}"
                )
        if len({p.tau for p in pairs}) != 1:
            raise DomainError("all pairs must share the epoch duration tau")
        if len({p.rate_scale for p in pairs}) != 1:
            raise DomainError("all pairs must share rate_scale")
        if int(self.slots_per_epoch) != self.slots_per_epoch or self.slots_per_epoch < 1:
            raise DomainError("slots_per_epoch must be a positive integer")
        if not self.q_cap > 0:
            raise DomainError("q_cap must be positive")
        L.setflags(write=False)
        object.__setattr__(self, "L_cross", L)
        object.__setattr__(self, "slots_per_epoch", int(self.slots_per_epoch))
        object.__setattr__(self, "rng_seed", int(self.rng_seed))

    @property
    def K(self) -> int:
        return len(self.pairs)

    @property
    def tau(self) -> float:
        return self.pairs[0].tau

    @property
    def rate_scale(self) -> float:
        return self.pairs[0].rate_scale

    @property
    def slot_duration(self) -> float:
        return self.tau / self.slots_per_epoch

    @property
    def coupling(self) -> float:
        """Largest cross-link path gain, the weak-coupling parameter."""
        if self.K == 1:
            return 0.0
        off = self.L_cross[~np.eye(self.K, dtype=bool)]
        return float(off.max())

    def vector(self, name):
        return np.array([getattr(p, name) for p in self.pairs], dtype=float)

    def with_pairs(self, pairs, **changes):
        L = np.array(self.L_cross, dtype=float)
        for k, p in enumerate(pairs):
            L[k, k] = p.L_direct
        kw = dict(pairs=tuple(pairs), L_cross=L, slots_per_epoch=self.slots_per_epoch,
                  q_cap=self.q_cap, rng_seed=self.rng_seed)
        kw.update(changes)
        return NetworkConfig(**kw)


def symmetric_config(K, lam_per_epoch, gamma, tau=1.0, cross=0.0, beta=1.0, L_direct=1.0,
                     rate_scale=1.0, slots_per_epoch=10, q_cap=200.0, rng_seed=0) -> NetworkConfig:
    """All pairs identical; every cross gain equals ``cross``."""
    pair = PairParams(lam=lam_per_epoch / tau, gamma=gamma, beta=beta, L_direct=L_direct,
                      tau=tau, rate_scale=rate_scale)
    L = np.full((K, K), float(cross))
    np.fill_diagonal(L, L_direct)
    return NetworkConfig(pairs=(pair,) * K, L_cross=L, slots_per_epoch=slots_per_epoch,
                         q_cap=q_cap, rng_seed=rng_seed)


@dataclass(frozen=True)
class ChannelState:
    H2: np.ndarray

    def gains(self, cfg: NetworkConfig) -> np.ndarray:
        """Effective power gains L_kj |H_kj|^2."""
        return cfg.L_cross * self.H2


@dataclass(frozen=True)
class QueueState:
    Q: np.ndarray


@dataclass(frozen=True)
class ArrivalBatch:
    A: np.ndarray


@dataclass(frozen=True)
class PowerProfile:
    p: np.ndarray


def make_stream(seed: int, replication: int, pair: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replication), int(pair), int(purpose)))
    return np.random.Generator(np.random.PCG64(ss))


def pair_streams(seed, replication, K, purpose):
    return [make_stream(seed, replication, k, purpose) for k in range(K)]


def sample_channel(cfg: NetworkConfig, stream) -> ChannelState:
    """One slot of K x K Exp(1) fading power gains.

    ``stream`` is either one Generator (K*K draws, row-major) or a sequence of
    K Generators, one per receiver row.
    """
    K = cfg.K
    if isinstance(stream, np.random.Generator):
        H2 = stream.standard_exponential((K, K))
    else:
        H2 = np.stack([s.standard_exponential(K) for s in stream])
    return ChannelState(H2=H2)


def sample_arrivals(cfg: NetworkConfig, stream) -> ArrivalBatch:
    """Poisson(lam * tau) packets per pair for one epoch, as a per-second rate."""
    mean = cfg.vector("lam") * cfg.tau
    if isinstance(stream, np.random.Generator):
        n = stream.poisson(mean)
    else:
        n = np.array([s.poisson(m) for s, m in zip(stream, mean)])
    return ArrivalBatch(A=n.astype(float) / cfg.tau)


def sinr(cfg: NetworkConfig, h: ChannelState, power: PowerProfile) -> np.ndarray:
    G = h.gains(cfg)
    p = np.asarray(power.p, dtype=float)
    signal = np.diag(G) * p
    interference = G @ p - signal
    return signal / (1.0 + interference)


def instantaneous_rate(cfg: NetworkConfig, h: ChannelState, power: PowerProfile, k=None):
    """Rate of pair ``k`` (or all pairs) in packets/second, interference as noise."""
    r = cfg.rate_scale * np.log1p(sinr(cfg, h, power))
    return r if k is None else float(r[k])


def step_queue(cfg: NetworkConfig, q: QueueState, served, arrivals: ArrivalBatch) -> QueueState:
    """Serve, then add the epoch's arrivals, then truncate at q_cap."""
    Q = np.asarray(q.Q, dtype=float)
    served = np.asarray(served, dtype=float)
    if np.any(served > Q + _OVERDRAFT_TOL):
        k = int(np.argmax(served - Q))
        raise Overdraft(f"overdraft: pair {k} served {served[k]:g} > queued {Q[k]:g}")
    after = np.maximum(Q - served, 0.0) + np.asarray(arrivals.A, dtype=float) * cfg.tau
    return QueueState(Q=np.minimum(after, cfg.q_cap))


def dropped_packets(cfg: NetworkConfig, q: QueueState, served, arrivals: ArrivalBatch):
    after = np.maximum(np.asarray(q.Q) - served, 0.0) + np.asarray(arrivals.A) * cfg.tau
    return np.maximum(after - cfg.q_cap, 0.0)


def stage_cost(cfg: NetworkConfig, q: QueueState, mean_power) -> float:
    """Per-epoch cost: delay weight on queue/arrivals-per-epoch plus priced power."""
    lam_epoch = cfg.vector("lam") * cfg.tau
    beta = cfg.vector("beta")
    gamma = cfg.vector("gamma")
    Q = np.asarray(q.Q, dtype=float)
    return float(np.sum(beta * Q / lam_epoch + gamma * np.asarray(mean_power, dtype=float)))

