"""Flat ``key = value`` configuration files for networks and experiment plans.

A network file::

    # two pairs at 6 dB-ish SNR
    K = 2
    tau = 0.005              # seconds per epoch
    rate_scale = reference   # or a number of packets per second per nat
    cross = 0.1              # every off-diagonal path gain
    pair.*.lambda = 1.0      # packets per epoch, default for every pair
    pair.*.gamma = 0.05
    pair.1.lambda = 1.5      # per-pair override
    L_cross.0.1 = 0.05       # per-entry override

Blank lines and ``#`` comments are ignored. Unknown keys, duplicates and bad
values are reported with their line number.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FluidError
from .fluid_value import PairParams
from .network_model import REFERENCE_RATE_SCALE, NetworkConfig

NETWORK_DEFAULTS = {
    "tau": 0.005,
    "rate_scale": float(REFERENCE_RATE_SCALE),
    "slots_per_epoch": 10,
    "q_cap": 200.0,
    "seed": 0,
    "cross": 0.0,
}
PAIR_DEFAULTS = {"beta": 1.0, "L_direct": 1.0}
PAIR_KEYS = ("lambda", "gamma", "beta", "L_direct")

ORACLE_DEFAULTS = {
    "oracle.queue_levels": 21,
    "oracle.power_levels": 10,
    "oracle.atoms_per_link": 10,
    "oracle.tol": 1e-8,
    "oracle.max_sweeps": 20000,
    "oracle.q_cap": 20.0,
}

SWEEPS = ("gamma", "lambda", "K", "coupling")
CONTROLLERS = ("PROPOSED", "TDMA", "CSI_ONLY", "QWTO")

_PAIR_RE = re.compile(r"^pair\.(\*|\d+)\.(\w+)$")
_CROSS_RE = re.compile(r"^L_cross\.(\d+)\.(\d+)$")


def read_pairs(path) -> dict:
    """Raw ``key -> (value, line)`` mapping of a flat config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=n)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"empty key or value in {raw.strip()!r}", line=n)
        if key in out:
            raise ConfigError(f"duplicate key {key!r} (first set at line {out[key][1]})", line=n)
        out[key] = (value, n)
    return out


def _number(raw, key, line, kind=float):
    try:
        val = kind(raw)
    except ValueError:
        raise ConfigError(f"{key} must be {'an integer' if kind is int else 'a number'}, got {raw!r}",
                          line=line) from None
    if kind is float and not np.isfinite(val):
        raise ConfigError(f"{key} must be finite, got {raw!r}", line=line)
    return val


@dataclass(frozen=True)
class OracleSettings:
    queue_levels: int = 21
    power_levels: int = 10
    atoms_per_link: int = 10
    tol: float = 1e-8
    max_sweeps: int = 20000
    q_cap: float = 20.0


@dataclass(frozen=True)
class NetworkFile:
    """A parsed network file: the configuration plus tool settings."""

    cfg: NetworkConfig
    oracle: OracleSettings = field(default_factory=OracleSettings)
    table_points: int = 4096
    table_q_max: float | None = None
    path: Path | None = None


def parse_network(path, seed_override=None) -> NetworkFile:
    """Parse and validate a network file; ``seed_override`` replaces ``seed``."""
    raw = read_pairs(path)
    used = set()

    def take(key, default=None, kind=float, required=False):
        if key in raw:
            used.add(key)
            value, line = raw[key]
            return _number(value, key, line, kind), line
        if required:
            raise ConfigError(f"parse error: missing key {key!r}")
        return default, None

    K, K_line = take("K", kind=int, required=True)
    if K < 1:
        raise ConfigError("K must be at least 1", line=K_line)

    net = {}
    for key, default in NETWORK_DEFAULTS.items():
        if key == "rate_scale" and raw.get(key, ("",))[0] == "reference":
            used.add(key)
            net[key] = (float(REFERENCE_RATE_SCALE), raw[key][1])
            continue
        kind = int if key in ("slots_per_epoch", "seed") else float
        net[key] = take(key, default, kind)

    # pair.* defaults, then explicit pair.k entries
    pair_vals = [{} for _ in range(K)]
    for key, (value, line) in raw.items():
        m = _PAIR_RE.match(key)
        if not m:
            continue
        used.add(key)
        who, name = m.groups()
        if name not in PAIR_KEYS:
            raise ConfigError(f"unknown pair key {name!r} (expected one of {', '.join(PAIR_KEYS)})", line=line)
        if who != "*" and int(who) >= K:
            raise ConfigError(f"pair index {who} out of range for K={K}", line=line)
        val = _number(value, key, line)
        targets = range(K) if who == "*" else [int(who)]
        for k in targets:
            if who == "*" and name in pair_vals[k] and pair_vals[k][name][2]:
                continue
            pair_vals[k][name] = (val, line, who != "*")

    tau = net["tau"][0]
    pairs = []
    for k in range(K):
        vals = {}
        for name in PAIR_KEYS:
            if name in pair_vals[k]:
                vals[name] = pair_vals[k][name][:2]
            elif name in PAIR_DEFAULTS:
                vals[name] = (PAIR_DEFAULTS[name], None)
            else:
                raise ConfigError(f"parse error: missing key 'pair.{k}.{name}'")
        try:
            pairs.append(PairParams(lam=vals["lambda"][0] / tau, gamma=vals["gamma"][0],
                                    beta=vals["beta"][0], L_direct=vals["L_direct"][0],
                                    tau=tau, rate_scale=net["rate_scale"][0]))
        except FluidError as exc:
            lines = [v[1] for v in vals.values() if v[1] is not None]
            raise ConfigError(f"pair {k}: {exc}", line=min(lines) if lines else None) from exc

    L = np.full((K, K), net["cross"][0])
    np.fill_diagonal(L, [p.L_direct for p in pairs])
    cross_lines = {}
    for key, (value, line) in raw.items():
        m = _CROSS_RE.match(key)
        if not m:
            continue
        used.add(key)
        r, c = int(m.group(1)), int(m.group(2))
        if r >= K or c >= K:
            raise ConfigError(f"{key} out of range for K={K}", line=line)
        L[r, c] = _number(value, key, line)
        cross_lines[(r, c)] = line

    oracle = {}
    for key, default in ORACLE_DEFAULTS.items():
        kind = float if key in ("oracle.tol", "oracle.q_cap") else int
        oracle[key.split(".", 1)[1]] = take(key, default, kind)[0]
    points = take("table.points", 4096, int)[0]
    q_max = take("table.q_max", None, float)[0]

    unknown = sorted(set(raw) - used, key=lambda k: raw[k][1])
    if unknown:
        key = unknown[0]
        raise ConfigError(f"unknown key {key!r}", line=raw[key][1])

    seed = net["seed"][0] if seed_override is None else int(seed_override)
    try:
        cfg = NetworkConfig(pairs=tuple(pairs), L_cross=L, slots_per_epoch=net["slots_per_epoch"][0],
                            q_cap=net["q_cap"][0], rng_seed=seed)
    except FluidError as exc:
        line = None
        msg = str(exc)
        d = re.search(r"L_cross\[(\d+)\]\[(\d+)\]", msg)
        if d:
            line = cross_lines.get((int(d.group(1)), int(d.group(2))))
        raise ConfigError(msg, line=line) from exc
    try:
        settings = OracleSettings(**oracle)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return NetworkFile(cfg=cfg, oracle=settings, table_points=points, table_q_max=q_max, path=Path(path))


def describe_network(nf: NetworkFile) -> str:
    """Echo the fully defaulted configuration in the same key = value format."""
    cfg = nf.cfg
    lines = [
        f"K = {cfg.K}",
        f"tau = {cfg.tau!r}",
        f"rate_scale = {cfg.rate_scale!r}",
        f"slots_per_epoch = {cfg.slots_per_epoch}",
        f"q_cap = {cfg.q_cap!r}",
        f"seed = {cfg.rng_seed}",
    ]
    for k, p in enumerate(cfg.pairs):
        lines += [
            f"pair.{k}.lambda = {p.arrivals_per_epoch!r}",
            f"pair.{k}.gamma = {p.gamma!r}",
            f"pair.{k}.beta = {p.beta!r}",
            f"pair.{k}.L_direct = {p.L_direct!r}",
        ]
    for r in range(cfg.K):
        for c in range(cfg.K):
            if r != c:
                lines.append(f"L_cross.{r}.{c} = {float(cfg.L_cross[r, c])!r}")
    o = nf.oracle
    lines += [f"oracle.{name} = {getattr(o, name)!r}" for name in OracleSettings.__dataclass_fields__]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExperimentPlan:
    name: str
    base: Path
    sweep: str
    values: tuple
    controllers: tuple
    output: Path
    epochs: int = 5000
    warmup: int | None = None
    replications: int = 8
    threads: int = 1
    tables_dir: Path | None = None

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ConfigError(f"sweep must be one of {', '.join(SWEEPS)}, got {self.sweep!r}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if not self.controllers:
            raise ConfigError("plan needs at least one controller")


def _list(raw, key, line, kind=float):
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"{key} is empty", line=line)
    return tuple(_number(s, key, line, kind) for s in items)


def parse_plan(path) -> ExperimentPlan:
    """Parse an experiment plan; relative paths resolve against the plan's folder."""
    path = Path(path)
    raw = read_pairs(path)
    here = path.parent

    def need(key):
        if key not in raw:
            raise ConfigError(f"parse error: missing key {key!r}")
        return raw[key]

    known = {"name", "base", "sweep", "values", "controllers", "output", "epochs", "warmup",
             "replications", "threads", "tables_dir"}
    for key, (_, line) in sorted(raw.items(), key=lambda kv: kv[1][1]):
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", line=line)

    sweep, s_line = need("sweep")
    sweep = sweep.removesuffix("_list")
    if sweep not in SWEEPS:
        raise ConfigError(f"sweep must be one of {', '.join(SWEEPS)}, got {sweep!r}", line=s_line)
    v_raw, v_line = need("values")
    values = _list(v_raw, "values", v_line, int if sweep == "K" else float)
    c_raw, c_line = need("controllers")
    ctls = tuple(s.strip().upper() for s in c_raw.split(",") if s.strip())
    for c in ctls:
        if c not in CONTROLLERS:
            raise ConfigError(f"unknown controller {c!r} (expected {', '.join(CONTROLLERS)})", line=c_line)
    if len(set(ctls)) != len(ctls):
        raise ConfigError("controllers listed twice", line=c_line)

    ints = {}
    for key, default in (("epochs", 5000), ("warmup", None), ("replications", 8), ("threads", 1)):
        if key in raw:
            val = _number(raw[key][0], key, raw[key][1], int)
            if val < (0 if key == "warmup" else 1):
                raise ConfigError(f"{key} out of range: {val}", line=raw[key][1])
            ints[key] = val
        else:
            ints[key] = default
    if ints["warmup"] is not None and ints["warmup"] >= ints["epochs"]:
        raise ConfigError("warmup must be smaller than epochs", line=raw["warmup"][1])

    output = here / need("output")[0]
    if not output.parent.is_dir():
        raise ConfigError(f"output folder {output.parent} does not exist", line=raw["output"][1])
    tables = here / raw["tables_dir"][0] if "tables_dir" in raw else None
    return ExperimentPlan(
        name=raw.get("name", (path.stem,))[0],
        base=here / need("base")[0],
        sweep=sweep,
        values=values,
        controllers=ctls,
        output=output,
        tables_dir=tables,
        **ints,
    )
