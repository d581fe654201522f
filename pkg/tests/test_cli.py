import csv
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fluidctl.cli import CSV_HEADER, main, run_plan, sweep_config
from fluidctl.config import describe_network, parse_network, parse_plan
from fluidctl.errors import ConfigError
from fluidctl.network_model import REFERENCE_RATE_SCALE

MINIMAL = "K = 2\npair.*.lambda = 1.0\npair.*.gamma = 0.05\n"


def write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def small_plan(tmp_path, sweep="gamma", values="0.05, 0.1, 0.2", controllers="PROPOSED, CSI_ONLY", extra=""):
    write(tmp_path / "net.cfg", "K = 2\ncross = 0.1\npair.*.lambda = 1.0\npair.*.gamma = 0.05\nseed = 9\n")
    return write(tmp_path / "plan.cfg",
                 f"name = t\nbase = net.cfg\nsweep = {sweep}\nvalues = {values}\n"
                 f"controllers = {controllers}\noutput = out.csv\nepochs = 120\nreplications = 2\n{extra}")


def test_minimal_file_fills_defaults(tmp_path):
    nf = parse_network(write(tmp_path / "a.cfg", MINIMAL))
    cfg = nf.cfg
    assert cfg.K == 2 and cfg.tau == 0.005 and cfg.slots_per_epoch == 10 and cfg.q_cap == 200.0
    assert cfg.rate_scale == float(REFERENCE_RATE_SCALE) and cfg.rng_seed == 0
    assert cfg.pairs[0].arrivals_per_epoch == pytest.approx(1.0)
    assert cfg.pairs[1].beta == 1.0 and cfg.coupling == 0.0
    echo = describe_network(nf)
    assert "slots_per_epoch = 10" in echo and "pair.1.gamma = 0.05" in echo
    # the echo is itself a valid file describing the same network
    again = parse_network(write(tmp_path / "b.cfg", echo))
    assert again.cfg.pairs == cfg.pairs and np.array_equal(again.cfg.L_cross, cfg.L_cross)


def test_pair_overrides_and_cross_entries(tmp_path):
    text = MINIMAL + "pair.1.lambda = 2.0\ncross = 0.1\nL_cross.0.1 = 0.05\n"
    cfg = parse_network(write(tmp_path / "a.cfg", text)).cfg
    assert cfg.pairs[1].arrivals_per_epoch == pytest.approx(2.0)
    assert cfg.L_cross[0, 1] == 0.05 and cfg.L_cross[1, 0] == 0.1


def test_explicit_pair_value_wins_regardless_of_order(tmp_path):
    text = "K = 2\npair.0.lambda = 3.0\npair.*.lambda = 1.0\npair.*.gamma = 0.05\n"
    cfg = parse_network(write(tmp_path / "a.cfg", text)).cfg
    assert cfg.pairs[0].arrivals_per_epoch == pytest.approx(3.0)
    assert cfg.pairs[1].arrivals_per_epoch == pytest.approx(1.0)


def test_diagonal_invariant_error(tmp_path):
    path = write(tmp_path / "a.cfg", MINIMAL + "L_cross.1.1 = 0.5\n")
    with pytest.raises(ConfigError, match=r"line 4: invariant violated"):
        parse_network(path)


def test_missing_lambda_names_the_key(tmp_path):
    path = write(tmp_path / "a.cfg", "K = 2\npair.*.gamma = 0.05\n")
    with pytest.raises(ConfigError, match=r"parse error: missing key 'pair.0.lambda'"):
        parse_network(path)


@pytest.mark.parametrize("text, line", [
    ("K = 2\nnonsense\n", 2),
    ("K = 2\npair.*.lambda = fast\n", 2),
    ("K = 1\npair.*.lambda = 1\npair.*.gamma = 1\nwhat = 3\n", 4),
    ("K = 1\npair.*.lambda = 1\npair.*.gamma = 1\npair.*.lambda = 2\n", 4),
    ("K = 1\npair.3.lambda = 1\n", 2),
    ("K = 1\npair.0.speed = 1\n", 2),
    ("K = 1\npair.*.lambda = 1\npair.*.gamma = -1\n", 2),
])
def test_errors_carry_line_numbers(tmp_path, text, line):
    with pytest.raises(ConfigError, match=f"parse error at line {line}"):
        parse_network(write(tmp_path / "a.cfg", text))


def test_seed_override(tmp_path):
    path = write(tmp_path / "a.cfg", MINIMAL + "seed = 4\n")
    assert parse_network(path).cfg.rng_seed == 4
    assert parse_network(path, seed_override=77).cfg.rng_seed == 77


def test_plan_parsing(tmp_path):
    plan = parse_plan(small_plan(tmp_path))
    assert plan.values == (0.05, 0.1, 0.2) and plan.controllers == ("PROPOSED", "CSI_ONLY")
    assert plan.output == tmp_path / "out.csv"
    with pytest.raises(ConfigError, match="unknown controller"):
        parse_plan(small_plan(tmp_path, controllers="PROPOSED, MAGIC"))
    with pytest.raises(ConfigError, match="sweep must be one of"):
        parse_plan(small_plan(tmp_path, sweep="colour"))


def test_sweep_config_variants(tmp_path):
    base = parse_network(write(tmp_path / "a.cfg", MINIMAL + "cross = 0.1\n")).cfg
    assert sweep_config(base, "gamma", 0.3).pairs[1].gamma == 0.3
    assert sweep_config(base, "lambda", 2.0).pairs[0].arrivals_per_epoch == pytest.approx(2.0)
    assert sweep_config(base, "coupling", 0.02).coupling == 0.02
    k4 = sweep_config(base, "K", 4)
    assert k4.K == 4 and k4.coupling == 0.1


def test_run_plan_rows_and_determinism(tmp_path):
    plan = parse_plan(small_plan(tmp_path))
    assert run_plan(plan) == 0
    first = plan.output.read_bytes()
    rows = list(csv.reader(first.decode().splitlines()))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 1 + 3 * 2
    assert [r[2] for r in rows[1:]] == ["PROPOSED", "CSI_ONLY"] * 3
    assert all(r[8] == "9" and r[9] == "10" for r in rows[1:])
    assert run_plan(plan, threads=8) == 0
    assert plan.output.read_bytes() == first


def test_run_plan_k_sweep(tmp_path):
    plan = parse_plan(small_plan(tmp_path, sweep="K", values="1, 2", controllers="TDMA, QWTO"))
    assert run_plan(plan) == 0
    rows = list(csv.reader(plan.output.read_text().splitlines()))
    assert [r[1] for r in rows[1:]] == ["1", "1", "2", "2"]


def test_run_plan_failure_leaves_no_csv(tmp_path):
    # lambda = 50 packets per epoch cannot be carried at any water level in the tables' range
    plan = parse_plan(small_plan(tmp_path, sweep="lambda", values="1.0, 5000"))
    (tmp_path / "out.csv").write_text("stale")
    status = run_plan(plan, out=open(tmp_path / "err.txt", "w"))
    assert status == 1
    assert not plan.output.exists()


def test_run_plan_writes_tables(tmp_path):
    plan = parse_plan(small_plan(tmp_path, values="0.05", controllers="CSI_ONLY", extra="tables_dir = tabs\n"))
    assert run_plan(plan) == 0
    files = sorted(p.name for p in (tmp_path / "tabs").iterdir())
    assert files == ["t_gamma_0.05_pair0.csv", "t_gamma_0.05_pair1.csv"]


def test_main_table_and_show(tmp_path, capsys):
    path = write(tmp_path / "a.cfg", MINIMAL + "q_cap = 30\ntable.points = 64\n")
    assert main(["table", str(path), "-o", str(tmp_path / "t.csv")]) == 0
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "y,q,J" and len(lines) == 65
    assert main(["show", str(path)]) == 0
    assert "q_cap = 30.0" in capsys.readouterr().out


def test_main_reports_config_errors(tmp_path, capsys):
    path = write(tmp_path / "a.cfg", "K = 2\n")
    assert main(["show", str(path)]) == 2
    assert "missing key" in capsys.readouterr().err


def test_env_seed_overrides(tmp_path, monkeypatch):
    plan = small_plan(tmp_path, values="0.1", controllers="CSI_ONLY")
    monkeypatch.setenv("FLUIDCTL_SEED", "123")
    assert main(["simulate", str(plan)]) == 0
    rows = list(csv.reader((tmp_path / "out.csv").read_text().splitlines()))
    assert rows[1][8] == "123"
    monkeypatch.setenv("FLUIDCTL_SEED", "abc")
    assert main(["simulate", str(plan)]) == 2


def test_oracle_and_coupling_commands(tmp_path, capsys):
    text = ("K = 2\ncross = 0.05\npair.*.lambda = 1.0\npair.*.gamma = 0.5\n"
            "oracle.queue_levels = 6\noracle.q_cap = 5\noracle.atoms_per_link = 2\noracle.power_levels = 4\n")
    path = write(tmp_path / "o.cfg", text)
    assert main(["oracle", str(path), "--values-out", str(tmp_path / "v.csv"),
                 "--gap-out", str(tmp_path / "g.csv")]) == 0
    out = capsys.readouterr().out
    assert "theta" in out and "bellman residual" in out
    assert (tmp_path / "v.csv").read_text().startswith("q1,q2,V\n")
    assert main(["sweep-coupling", str(path), "--values", "0.01,0.02", "-o", str(tmp_path / "c.csv")]) == 0
    assert (tmp_path / "c.csv").read_text().splitlines()[:2] == ["L,e", "0.0,0.0"]


def test_console_entry_point(tmp_path):
    path = write(tmp_path / "a.cfg", MINIMAL)
    out = subprocess.run([sys.executable, "-m", "fluidctl.cli", "show", str(path)],
                         capture_output=True, text=True, check=True)
    assert out.stdout.startswith("K = 2\n")


def test_sweep_accepts_list_suffix(tmp_path):
    plan = parse_plan(small_plan(tmp_path, sweep="lambda_list", values="1.0"))
    assert plan.sweep == "lambda"
