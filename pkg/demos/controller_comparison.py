"""Average cost of the four controllers as the arrival rate grows.

Three pairs with cross gain 0.1 and gamma = 0.05 per watt; each point runs
4 replications of 2000 epochs. PROPOSED uses the fluid value tables for its
queue weights; the baselines use constant weights (CSI_ONLY), queue-length
weights (QWTO) or a single transmitter per slot (TDMA).

    python demos/controller_comparison.py
"""

from fluidctl.controllers import Controller, ControllerKind
from fluidctl.fluid_value import build_fluid_table
from fluidctl.network_model import REFERENCE_RATE_SCALE, symmetric_config
from fluidctl.sim_engine import run_batch

loads = (0.5, 1.0, 1.5, 2.0)
items = []
for lam in loads:
    cfg = symmetric_config(3, lam, 0.05, tau=0.005, cross=0.1, rate_scale=REFERENCE_RATE_SCALE, rng_seed=3)
    table = build_fluid_table(cfg.pairs[0], 210.0)
    for kind in ControllerKind:
        tables = (table,) * 3 if kind is ControllerKind.PROPOSED else None
        items.append((lam, cfg, Controller(kind, tables=tables)))

results = run_batch([(cfg, ctl) for _, cfg, ctl in items], epochs=2000, warmup=400,
                    replications=4, seed=3, threads=4)

print(f"{'load':>5} {'controller':>10} {'cost':>9} {'+/-':>7} {'delay ms':>9} {'power W':>8}")
for (lam, _, ctl), r in zip(items, results):
    print(f"{lam:5.1f} {ctl.kind.value:>10} {r.mean_cost:9.4f} {r.ci_halfwidth['cost']:7.4f} "
          f"{1e3 * r.mean_delay.mean():9.3f} {r.mean_power.mean():8.3f}")
