"""Exact value iteration against the additive fluid approximation.

Solves two small discretised networks exactly (one pair, then two pairs
with cross gain 0.1), reports how far V is from sum_k J_k by queue-norm
decile, then measures how the exact value moves with the cross gain.
Takes about a minute.

    python demos/oracle_gap.py
"""

import time

import numpy as np

from fluidctl.fluid_value import build_fluid_table
from fluidctl.mdp_oracle import (
    approximation_gap,
    bellman_residual,
    build_discrete_mdp,
    coupling_sweep,
    relative_value_iteration,
)
from fluidctl.network_model import REFERENCE_RATE_SCALE, symmetric_config


def network(K, gamma, cross=0.0):
    return symmetric_config(K, 1.0, gamma, tau=0.005, cross=cross, rate_scale=REFERENCE_RATE_SCALE, q_cap=20)


for K in (1, 2):
    cfg = network(K, 0.1, cross=0.1 if K == 2 else 0.0)
    t0 = time.perf_counter()
    mdp = build_discrete_mdp(cfg, atoms_per_link=6)
    sol = relative_value_iteration(mdp)
    tables = [build_fluid_table(p, 25.0) for p in cfg.pairs]
    gap = approximation_gap(mdp, sol, tables)
    print(f"K = {K}: {mdp.n_states} states, average cost {sol.theta:.5f}, "
          f"Bellman residual {bellman_residual(mdp, sol):.1e}, {time.perf_counter() - t0:.1f} s")
    print("  relative gap by norm decile:", np.round(gap.bin_rel_gap, 3))

print("\nvalue change e(L) = max |V_L - V_0| against the cross gain (gamma = 2)")
rep = coupling_sweep(network(2, 2.0), atoms_per_link=6)
print(f"  e(0) = {rep.e_zero}")
for L, e in zip(rep.couplings, rep.errors):
    print(f"  e({L}) = {e:.4f}")
print(f"  log-log slope {rep.slope:.3f}")
