"""Compiled inner loops for the simulator.

These mirror :func:`fluidctl.controllers.solve_game` and
:func:`fluidctl.controllers.tdma_controller` operation for operation; the test
suite cross-checks them against the numpy versions. Each lane is processed
with scalar loops only, so a lane's result never depends on which other lanes
share the call.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _cap(g, interference, q_rem, per_slot):
    if q_rem <= 0.0 or g <= 0.0:
        return 0.0
    return (1.0 + interference) * math.expm1(q_rem / per_slot) / g


@njit(cache=True)
def game_lane(w, G, gamma, T, per_slot, q_rem, tol, max_rounds, relax, p):
    """Solve one CSI realization in place into ``p``; returns (rounds, converged)."""
    K = w.shape[0]
    I = np.zeros(K)
    m = np.zeros(K)
    p_new = np.zeros(K)
    for k in range(K):
        g = G[k, k]
        if g > 0.0:
            lvl = w[k] * T / gamma[k] - 1.0 / g
            if lvl < 0.0:
                lvl = 0.0
        else:
            lvl = 0.0
        c = _cap(g, 0.0, q_rem[k], per_slot)
        p[k] = lvl if lvl < c else c
    rounds = 0
    converged = False
    step = 1.0
    prev = np.inf
    while rounds < max_rounds:
        rounds += 1
        for j in range(K):
            acc = 0.0
            for k in range(K):
                if k != j:
                    acc += G[j, k] * p[k]
            I[j] = acc
            s = G[j, j] * p[j]
            m[j] = w[j] * T * (s / (1.0 + acc)) / (1.0 + acc + s)
        delta = 0.0
        for k in range(K):
            price = gamma[k]
            for j in range(K):
                if j != k:
                    price += m[j] * G[j, k]
            g = G[k, k]
            if g > 0.0:
                lvl = w[k] * T / price - (1.0 + I[k]) / g
                if lvl < 0.0:
                    lvl = 0.0
            else:
                lvl = 0.0
            c = _cap(g, I[k], q_rem[k], per_slot)
            p_new[k] = lvl if lvl < c else c
            d = abs(p_new[k] - p[k])
            if d > delta:
                delta = d
        if delta < tol:
            for k in range(K):
                p[k] = p_new[k]
            converged = True
            break
        if delta >= prev:
            step = relax
        prev = delta
        for k in range(K):
            if step == 1.0:
                p[k] = p_new[k]
            else:
                p[k] = p[k] + step * (p_new[k] - p[k])
    return rounds, converged


@njit(cache=True)
def tdma_lane(w, G, gamma, T, per_slot, q_rem, p):
    K = w.shape[0]
    best = 0
    for k in range(1, K):
        if G[k, k] > G[best, best]:
            best = k
    for k in range(K):
        p[k] = 0.0
    g = G[best, best]
    if q_rem[best] > 0.0 and g > 0.0:
        lvl = w[best] * T / gamma[best] - 1.0 / g
        if lvl < 0.0:
            lvl = 0.0
        c = _cap(g, 0.0, q_rem[best], per_slot)
        p[best] = lvl if lvl < c else c


@njit(cache=True)
def serve_epoch(Q, W, H2, Lc, gamma, T, per_slot, tdma, tol, max_rounds, relax,
                q_out, power_out, stats_out):
    """Run every slot of one epoch for a batch of lanes.

    Q, W, gamma: (B, K); H2: (S, K, K) shared by all lanes; Lc: (B, K, K);
    T, per_slot: (B,); tdma: (B,) bool. Writes the post-service queue to
    ``q_out``, slot-averaged power to ``power_out`` and, per lane, the
    largest round count and number of unconverged slots to ``stats_out``.
    """
    B, K = Q.shape
    S = H2.shape[0]
    G = np.empty((K, K))
    p = np.empty(K)
    q_rem = np.empty(K)
    for b in range(B):
        for k in range(K):
            q_rem[k] = Q[b, k]
            power_out[b, k] = 0.0
        max_r = 0
        missed = 0
        for s in range(S):
            for r in range(K):
                for c in range(K):
                    G[r, c] = Lc[b, r, c] * H2[s, r, c]
            if tdma[b]:
                tdma_lane(W[b], G, gamma[b], T[b], per_slot[b], q_rem, p)
            else:
                rounds, conv = game_lane(W[b], G, gamma[b], T[b], per_slot[b], q_rem,
                                         tol, max_rounds, relax, p)
                if rounds > max_r:
                    max_r = rounds
                if not conv:
                    missed += 1
            for k in range(K):
                acc = 0.0
                for j in range(K):
                    if j != k:
                        acc += G[k, j] * p[j]
                served = math.log1p(G[k, k] * p[k] / (1.0 + acc)) * per_slot[b]
                if served > q_rem[k]:
                    served = q_rem[k]
                q_rem[k] -= served
                power_out[b, k] += p[k]
        for k in range(K):
            q_out[b, k] = q_rem[k]
            power_out[b, k] /= S
        stats_out[b, 0] = max_r
        stats_out[b, 1] = missed
