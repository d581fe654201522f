"""``fluidctl`` command line: fluid tables, simulation sweeps and the exact oracle.

Subcommands::

    fluidctl table NETWORK [--pair K] [-o FILE]
    fluidctl simulate PLAN [--threads N]
    fluidctl oracle NETWORK [--values-out FILE] [--gap-out FILE]
    fluidctl sweep-coupling NETWORK [--values L1,L2,...] [-o FILE]
    fluidctl show NETWORK

``FLUIDCTL_SEED`` in the environment replaces the seed in every config file.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentPlan, NetworkFile, describe_network, parse_network, parse_plan
from .controllers import Controller, ControllerKind
from .errors import ConfigError, FluidError
from .fluid_value import build_fluid_table, write_table_csv
from .mdp_oracle import (
    approximation_gap,
    bellman_residual,
    build_discrete_mdp,
    coupling_sweep,
    relative_value_iteration,
    write_solution_csv,
)
from .network_model import NetworkConfig
from .sim_engine import run_batch

CSV_HEADER = ["sweep_var", "value", "controller", "mean_delay", "mean_power", "mean_cost",
              "drops", "ci_delay", "seed", "slots_per_epoch"]
SEED_ENV = "FLUIDCTL_SEED"


def env_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _table_q_max(nf: NetworkFile, cfg: NetworkConfig) -> float:
    return nf.table_q_max if nf.table_q_max is not None else 1.05 * cfg.q_cap


def sweep_config(base: NetworkConfig, sweep: str, value) -> NetworkConfig:
    """The base network with one knob moved to ``value``."""
    if sweep == "gamma":
        return base.with_pairs([replace(p, gamma=float(value)) for p in base.pairs])
    if sweep == "lambda":
        return base.with_pairs([replace(p, lam=float(value) / p.tau) for p in base.pairs])
    if sweep == "coupling":
        L = np.full((base.K, base.K), float(value))
        np.fill_diagonal(L, base.vector("L_direct"))
        return NetworkConfig(pairs=base.pairs, L_cross=L, slots_per_epoch=base.slots_per_epoch,
                             q_cap=base.q_cap, rng_seed=base.rng_seed)
    if sweep == "K":
        K = int(value)
        if K < 1:
            raise ConfigError(f"K sweep values must be positive, got {K}")
        L = np.full((K, K), base.coupling)
        np.fill_diagonal(L, base.pairs[0].L_direct)
        return NetworkConfig(pairs=(base.pairs[0],) * K, L_cross=L, slots_per_epoch=base.slots_per_epoch,
                             q_cap=base.q_cap, rng_seed=base.rng_seed)
    raise ConfigError(f"unknown sweep {sweep!r}")


def _fmt(x) -> str:
    return repr(float(x))


def run_plan(plan: ExperimentPlan, seed_override=None, threads=None, out=sys.stderr) -> int:
    """Run every (sweep value, controller) of ``plan`` and write its CSV.

    Returns 0 on success. The CSV is written next to its target and renamed
    into place at the end. On any library error the message goes to ``out``,
    no CSV is left at the output path and 1 is returned.
    """
    partial = plan.output.with_name(plan.output.name + ".partial")
    try:
        nf = parse_network(plan.base, seed_override)
        base = nf.cfg
        configs = [sweep_config(base, plan.sweep, v) for v in plan.values]
        tables = {}
        items = []
        for value, cfg in zip(plan.values, configs):
            needs_tables = "PROPOSED" in plan.controllers or plan.tables_dir is not None
            if needs_tables:
                for k, pair in enumerate(cfg.pairs):
                    if pair not in tables:
                        tables[pair] = build_fluid_table(pair, _table_q_max(nf, cfg), nf.table_points)
                    if plan.tables_dir is not None:
                        plan.tables_dir.mkdir(parents=True, exist_ok=True)
                        write_table_csv(tables[pair],
                                        plan.tables_dir / f"{plan.name}_{plan.sweep}_{value}_pair{k}.csv")
            for name in plan.controllers:
                kind = ControllerKind(name)
                tb = tuple(tables[p] for p in cfg.pairs) if kind is ControllerKind.PROPOSED else None
                items.append((value, cfg, Controller(kind, tables=tb)))

        # one batch per network size; the simulator needs matching K within a batch
        results = [None] * len(items)
        by_K = {}
        for i, (_, cfg, _) in enumerate(items):
            by_K.setdefault(cfg.K, []).append(i)
        n_threads = plan.threads if threads is None else threads
        for idx in by_K.values():
            res = run_batch([(items[i][1], items[i][2]) for i in idx], plan.epochs,
                            plan.warmup if plan.warmup is not None else plan.epochs // 5,
                            plan.replications, base.rng_seed, threads=n_threads)
            for i, r in zip(idx, res):
                results[i] = r

        with partial.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for (value, cfg, ctl), r in zip(items, results):
                w.writerow([
                    plan.sweep,
                    str(value) if plan.sweep == "K" else _fmt(value),
                    ctl.kind.value,
                    _fmt(np.mean(r.mean_delay)),
                    _fmt(np.mean(r.mean_power)),
                    _fmt(r.mean_cost),
                    _fmt(np.sum(r.drops)),
                    _fmt(r.ci_halfwidth["mean_delay"]),
                    str(cfg.rng_seed),
                    str(cfg.slots_per_epoch),
                ])
        os.replace(partial, plan.output)
        return 0
    except (FluidError, OSError) as exc:
        print(f"fluidctl: {exc}", file=out)
        # a failed run must not leave a CSV that could pass for its result
        for path in (partial, plan.output):
            if path.exists():
                path.unlink()
        return 1


# --- subcommands ----------------------------------------------------------------


def _cmd_table(args) -> int:
    nf = parse_network(args.network, env_seed())
    cfg = nf.cfg
    if not 0 <= args.pair < cfg.K:
        raise ConfigError(f"--pair must be in [0, {cfg.K - 1}]")
    table = build_fluid_table(cfg.pairs[args.pair], _table_q_max(nf, cfg), nf.table_points)
    if args.output:
        write_table_csv(table, args.output)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["y", "q", "J"])
        for row in zip(table.y, table.q, table.J):
            w.writerow([_fmt(v) for v in row])
    return 0


def _cmd_simulate(args) -> int:
    plan = parse_plan(args.plan)
    return run_plan(plan, seed_override=env_seed(), threads=args.threads)


def _oracle_cfg(nf: NetworkFile) -> NetworkConfig:
    cfg = nf.cfg
    return NetworkConfig(pairs=cfg.pairs, L_cross=cfg.L_cross, slots_per_epoch=cfg.slots_per_epoch,
                         q_cap=nf.oracle.q_cap, rng_seed=cfg.rng_seed)


def _grid_kw(nf: NetworkFile) -> dict:
    o = nf.oracle
    return dict(queue_levels=o.queue_levels, power_levels=o.power_levels, atoms_per_link=o.atoms_per_link)


def _cmd_oracle(args) -> int:
    nf = parse_network(args.network, env_seed())
    cfg = _oracle_cfg(nf)
    mdp = build_discrete_mdp(cfg, **_grid_kw(nf))
    sol = relative_value_iteration(mdp, tol=nf.oracle.tol, max_sweeps=nf.oracle.max_sweeps)
    res = bellman_residual(mdp, sol)
    tables = [build_fluid_table(p, 1.05 * cfg.q_cap + 1.0) for p in cfg.pairs]
    gap = approximation_gap(mdp, sol, tables)
    print(f"states {mdp.n_states}  channel atoms {mdp.channel_prob.size}  actions {mdp.n_actions}")
    print(f"theta {sol.theta:.10g}  span {sol.span_residual:.3g}  bellman residual {res:.3g}  "
          f"sweeps {sol.sweeps}")
    print("decile  norm_lo  norm_hi  mean_rel_gap")
    for b, g in enumerate(gap.bin_rel_gap):
        print(f"{b:6d}  {gap.bin_edges[b]:7.3f}  {gap.bin_edges[b + 1]:7.3f}  {g:.6f}")
    if args.values_out:
        write_solution_csv(mdp, sol, args.values_out)
    if args.gap_out:
        with open(args.gap_out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["decile", "norm_lo", "norm_hi", "mean_rel_gap"])
            for b, g in enumerate(gap.bin_rel_gap):
                w.writerow([b, _fmt(gap.bin_edges[b]), _fmt(gap.bin_edges[b + 1]), _fmt(g)])
    return 0


def _cmd_sweep_coupling(args) -> int:
    nf = parse_network(args.network, env_seed())
    values = [float(s) for s in args.values.split(",") if s.strip()]
    rep = coupling_sweep(_oracle_cfg(nf), values, tol=nf.oracle.tol, **_grid_kw(nf))
    print("L  e(L)")
    print(f"0  {rep.e_zero!r}")
    for L, e in zip(rep.couplings, rep.errors):
        print(f"{L!r}  {e!r}")
    print(f"log-log slope {rep.slope:.4f}  monotone {rep.monotone}")
    if args.output:
        with open(args.output, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["L", "e"])
            w.writerow(["0.0", _fmt(rep.e_zero)])
            for L, e in zip(rep.couplings, rep.errors):
                w.writerow([_fmt(L), _fmt(e)])
    return 0


def _cmd_show(args) -> int:
    sys.stdout.write(describe_network(parse_network(args.network, env_seed())))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fluidctl", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", help="write the fluid value table of one pair")
    p.add_argument("network", type=Path)
    p.add_argument("--pair", type=int, default=0)
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=_cmd_table)

    p = sub.add_parser("simulate", help="run an experiment plan and write its CSV")
    p.add_argument("plan", type=Path)
    p.add_argument("--threads", type=int, default=None, help="override the plan's thread count")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("oracle", help="exact value iteration and fluid-gap report")
    p.add_argument("network", type=Path)
    p.add_argument("--values-out", type=Path, help="CSV of q1,q2,V")
    p.add_argument("--gap-out", type=Path, help="CSV of the binned relative gap")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("sweep-coupling", help="oracle value change versus cross-link gain")
    p.add_argument("network", type=Path)
    p.add_argument("--values", default="0.01,0.02,0.04,0.08")
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=_cmd_sweep_coupling)

    p = sub.add_parser("show", help="echo a network file with every default filled in")
    p.add_argument("network", type=Path)
    p.set_defaults(func=_cmd_show)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # output consumer went away (e.g. piped into head)
        sys.stderr.close()
        return 0
    except ConfigError as exc:
        print(f"fluidctl: {exc}", file=sys.stderr)
        return 2
    except (FluidError, OSError) as exc:
        print(f"fluidctl: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
