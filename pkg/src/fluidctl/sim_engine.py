"""Epoch/slot simulation of the interference network under a power controller.

Each epoch: the controller's weights are fixed from the epoch-start queues;
every slot draws fresh fading, solves for powers and serves packets (never
more than remain queued); at the end of the epoch Poisson arrivals join and
the queue is truncated at ``q_cap`` (drops counted).

Replications are independent. A replication's numbers depend only on
(seed, replication index, config, controller), never on how replications are
scheduled across threads, so results are bitwise reproducible.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from .controllers import Controller, ControllerKind, control
from .errors import DomainError, NoConvergence
from .fluid_value import eval_J_prime
from .network_model import (
    ARRIVAL,
    CHANNEL,
    ChannelState,
    NetworkConfig,
    QueueState,
    make_stream,
    sample_arrivals,
    sample_channel,
)

_BLOCK = 256


@dataclass(frozen=True)
class SimSpec:
    cfg: NetworkConfig
    controller: Controller
    epochs: int
    warmup_epochs: int | None = None
    replications: int = 1

    def __post_init__(self):
        if self.epochs < 1 or self.replications < 1:
            raise DomainError("epochs and replications must be positive")
        warm = self.warmup_epochs
        if warm is None:
            warm = self.epochs // 5
        if not 0 <= warm < self.epochs:
            raise DomainError("need 0 <= warmup_epochs < epochs")
        object.__setattr__(self, "warmup_epochs", int(warm))


@dataclass
class EpochMetrics:
    queue: np.ndarray
    power: np.ndarray
    served: np.ndarray
    drops: np.ndarray
    cost: float
    unconverged_slots: int = 0


@dataclass
class SimResult:
    mean_queue: np.ndarray
    mean_delay: np.ndarray
    mean_power: np.ndarray
    mean_cost: float
    drops: np.ndarray
    ci_halfwidth: dict
    replication_costs: np.ndarray = field(repr=False)
    queue_trace: np.ndarray = field(repr=False)
    max_rounds: int = 0
    unconverged_slots: int = 0


@dataclass
class Streams:
    """Per-pair channel and arrival generators for one replication."""

    channel: list
    arrival: list

    @classmethod
    def for_replication(cls, seed, replication, K):
        return cls(
            channel=[make_stream(seed, replication, k, CHANNEL) for k in range(K)],
            arrival=[make_stream(seed, replication, k, ARRIVAL) for k in range(K)],
        )


def _cost_terms(cfg):
    lam_epoch = cfg.vector("lam") * cfg.tau
    return cfg.vector("beta") / lam_epoch, cfg.vector("gamma")


def run_epoch(state: QueueState, cfg: NetworkConfig, controller: Controller, streams: Streams):
    """Advance one epoch with the numpy controllers (reference path)."""
    Q = np.asarray(state.Q, dtype=float)
    w = controller.weights(Q)
    q_rem = Q.copy()
    power = np.zeros(cfg.K)
    missed = 0
    for _ in range(cfg.slots_per_epoch):
        h = sample_channel(cfg, streams.channel)
        try:
            p = control(controller, w, cfg, h, QueueState(q_rem)).p
        except NoConvergence as exc:
            # same policy as the compiled path: keep the last iterate, count the slot
            p = exc.result.power.p
            missed += 1
        G = h.gains(cfg)
        interference = G @ p - np.diag(G) * p
        served = np.minimum(
            np.log1p(np.diag(G) * p / (1.0 + interference)) * cfg.rate_scale * cfg.slot_duration,
            q_rem,
        )
        q_rem = q_rem - served
        power += p
    power /= cfg.slots_per_epoch
    n = sample_arrivals(cfg, streams.arrival).A * cfg.tau
    total = q_rem + n
    nxt = np.minimum(total, cfg.q_cap)
    drops = total - nxt
    qw, pw = _cost_terms(cfg)
    metrics = EpochMetrics(queue=nxt, power=power, served=Q - q_rem, drops=drops,
                           cost=float(np.sum(qw * nxt + pw * power)), unconverged_slots=missed)
    return QueueState(nxt), metrics


@dataclass
class _Chunk:
    """Lanes sharing K, slots_per_epoch, seed and replication index."""

    cfgs: list
    controllers: list
    seed: int
    replication: int


def _lane_weights(controllers, Q):
    W = np.empty_like(Q)
    by_table = {}
    for b, ctl in enumerate(controllers):
        if ctl.kind is ControllerKind.PROPOSED:
            for k, table in enumerate(ctl.tables):
                by_table.setdefault(id(table), (table, []))[1].append((b, k))
        else:
            W[b] = ctl.weights(Q[b])
    # one vectorized inversion per distinct table
    for table, slots in by_table.values():
        rows, cols = zip(*slots)
        W[rows, cols] = eval_J_prime(table, Q[rows, cols])
    return W


def _run_chunk(chunk: _Chunk, epochs: int, warmup: int):
    cfgs, ctls = chunk.cfgs, chunk.controllers
    B = len(cfgs)
    K = cfgs[0].K
    S = cfgs[0].slots_per_epoch
    Lc = np.stack([c.L_cross for c in cfgs])
    gamma = np.stack([c.vector("gamma") for c in cfgs])
    T = np.array([c.tau * c.rate_scale for c in cfgs])
    per_slot = np.array([c.rate_scale * c.slot_duration for c in cfgs])
    tdma = np.array([ctl.kind is ControllerKind.TDMA for ctl in ctls])
    tol = np.array([ctl.game.term_tol for ctl in ctls])
    rounds_cap = np.array([ctl.game.max_rounds for ctl in ctls])
    relax = np.array([ctl.game.relaxation for ctl in ctls])
    if len({(a, b, c) for a, b, c in zip(tol.tolist(), rounds_cap.tolist(), relax.tolist())}) != 1:
        raise DomainError("lanes in one chunk must share game tolerances")
    q_cap = np.array([c.q_cap for c in cfgs])[:, None]
    lam_epoch = np.stack([c.vector("lam") * c.tau for c in cfgs])

    ch_streams = [make_stream(chunk.seed, chunk.replication, k, CHANNEL) for k in range(K)]
    ar_streams = [[make_stream(chunk.seed, chunk.replication, k, ARRIVAL) for k in range(K)]
                  for _ in range(B)]

    Q = np.zeros((B, K))
    q_post = np.empty((B, K))
    pw = np.empty((B, K))
    st = np.zeros((B, 2), dtype=np.int64)
    keep = epochs - warmup
    queue_trace = np.empty((keep, B, K))
    power_trace = np.empty((keep, B, K))
    drops = np.zeros((B, K))
    max_rounds = np.zeros(B, dtype=np.int64)
    missed = np.zeros(B, dtype=np.int64)

    for start in range(0, epochs, _BLOCK):
        n = min(_BLOCK, epochs - start)
        # row k of every slot's fading matrix comes from pair k's channel stream
        H = np.stack([s.standard_exponential((n, S, K)) for s in ch_streams], axis=2)
        arrivals = np.empty((n, B, K))
        for b in range(B):
            for k in range(K):
                arrivals[:, b, k] = ar_streams[b][k].poisson(lam_epoch[b, k], n)
        for e in range(n):
            t = start + e
            W = _lane_weights(ctls, Q)
            _kernels.serve_epoch(Q, W, H[e], Lc, gamma, T, per_slot, tdma, float(tol[0]),
                                 int(rounds_cap[0]), float(relax[0]), q_post, pw, st)
            total = q_post + arrivals[e]
            Q = np.minimum(total, q_cap)
            max_rounds = np.maximum(max_rounds, st[:, 0])
            if t >= warmup:
                i = t - warmup
                queue_trace[i] = Q
                power_trace[i] = pw
                drops += total - Q
                missed += st[:, 1]
    return queue_trace, power_trace, drops, max_rounds, missed


def _ci(samples):
    R = samples.shape[0]
    if R < 2:
        return np.full(samples.shape[1:], np.nan)
    t = stats.t.ppf(0.975, R - 1)
    return t * samples.std(axis=0, ddof=1) / math.sqrt(R)


def _summarize(cfg: NetworkConfig, runs):
    """Merge per-replication outputs (sorted by replication index)."""
    qw, pw = _cost_terms(cfg)
    mq = np.stack([r[0].mean(axis=0) for r in runs])
    mp = np.stack([r[1].mean(axis=0) for r in runs])
    dr = np.stack([r[2] for r in runs])
    rep_cost = mq @ qw + mp @ pw
    lam = cfg.vector("lam")
    mean_queue = mq.mean(axis=0)
    mean_power = mp.mean(axis=0)
    ci = {
        "queue": _ci(mq),
        "delay": _ci(mq / lam),
        "power": _ci(mp),
        "cost": float(_ci(rep_cost[:, None])[0]),
        "mean_delay": float(_ci((mq / lam).mean(axis=1)[:, None])[0]),
    }
    return SimResult(
        mean_queue=mean_queue,
        mean_delay=mean_queue / lam,
        mean_power=mean_power,
        mean_cost=float(mean_queue @ qw + mean_power @ pw),
        drops=dr.mean(axis=0),
        ci_halfwidth=ci,
        replication_costs=rep_cost,
        queue_trace=np.stack([r[0] for r in runs]),
        max_rounds=int(max(r[3] for r in runs)),
        unconverged_slots=int(sum(r[4] for r in runs)),
    )


def run_batch(items, epochs, warmup, replications, seed, threads=1):
    """Simulate several (cfg, controller) items that share K and slots_per_epoch.

    Returns one :class:`SimResult` per item. All items of one replication are
    advanced together in a single chunk; chunks run on ``threads`` workers.
    """
    items = list(items)
    if not items:
        return []
    for cfg, ctl in items:
        ctl.check_coverage(cfg.q_cap)
    shape = {(c.K, c.slots_per_epoch) for c, _ in items}
    if len(shape) != 1:
        raise DomainError("run_batch items must share K and slots_per_epoch")
    chunks = [
        _Chunk(cfgs=[c for c, _ in items], controllers=[k for _, k in items], seed=seed, replication=r)
        for r in range(replications)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(lambda ch: _run_chunk(ch, epochs, warmup), chunks))
    else:
        outs = [_run_chunk(ch, epochs, warmup) for ch in chunks]
    results = []
    for b, (cfg, _) in enumerate(items):
        runs = [(o[0][:, b], o[1][:, b], o[2][b], o[3][b], o[4][b]) for o in outs]
        results.append(_summarize(cfg, runs))
    return results


def run_simulation(spec: SimSpec, threads: int = 1) -> SimResult:
    """Average queue, delay, power and cost over post-warmup epochs and replications."""
    return run_batch([(spec.cfg, spec.controller)], spec.epochs, spec.warmup_epochs,
                     spec.replications, spec.cfg.rng_seed, threads=threads)[0]
