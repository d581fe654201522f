"""Tour of the per-pair fluid value function.

Builds the table for one 5 ms pair (gamma = 0.05 per watt, one packet per
epoch), prints J and J' on a few queue lengths, compares J with the
q^2 / ln q growth law and checks the HJB residual along the table.

    python demos/fluid_value_tour.py
"""

import numpy as np

from fluidctl.fluid_value import (
    PairParams,
    build_fluid_table,
    eval_J,
    eval_J_prime,
    hjb_residual,
    solve_steady_state,
)
from fluidctl.network_model import REFERENCE_RATE_SCALE

TAU = 0.005
params = PairParams(lam=1.0 / TAU, gamma=0.05, tau=TAU, rate_scale=REFERENCE_RATE_SCALE)

steady = solve_steady_state(params)
print(f"steady state: slope v = {steady.v:.6g}, average cost c_inf = {steady.c_inf:.6g}")

table = build_fluid_table(params, 1000.0)
print(f"table: {table.q.size} points up to q = {table.q_hi:.1f}\n")

print(f"{'q':>8} {'J(q)':>14} {'J_prime(q)':>12} {'J / (q^2/ln q)':>15}")
for q in (1.0, 10.0, 50.0, 100.0, 200.0, 500.0, 1000.0):
    J = float(eval_J(table, q))
    dJ = float(eval_J_prime(table, q))
    ratio = J / (q**2 / np.log(q)) if q > 1 else float("nan")
    print(f"{q:8.0f} {J:14.6g} {dJ:12.6g} {ratio:15.4f}")

q = table.q[table.q > 0]
scale = np.maximum(1.0, params.beta * q / params.arrivals_per_epoch)
print(f"\nlargest scaled HJB residual over the table: {np.max(np.abs(hjb_residual(table, q)) / scale):.2e}")
