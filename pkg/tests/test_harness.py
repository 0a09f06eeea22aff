import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mtibench import Problem, PurePower, integrate
from mtibench.cli import main
from mtibench.harness import (CellResult, SweepConfig, SweepResult, config_from_mapping, default_epsilons,
                              dump_trajectory, emit_table, parse_complex, parse_list, parse_number,
                              read_config_file, run_sweep)
from mtibench.model import convergence_rate
from mtibench.reference import ReferenceSettings


def small_config(cache_dir, **kw):
    base = dict(methods=("mti-fa", "exfd"), epsilons=(0.5, 0.25), taus=(0.2, 0.05, 0.0125),
                reference=ReferenceSettings(cache_dir=cache_dir, strict=False))
    base.update(kw)
    return SweepConfig(**base)


def test_literals():
    assert parse_number("0.5/2^3") == 0.0625
    assert parse_number("0.2/4^2") == 0.0125
    assert parse_list("1, 0.5/2^1") == (1.0, 0.5 / 2)
    assert parse_complex("1+0i") == 1 + 0j
    assert parse_complex("-0.5-2i") == -0.5 - 2j
    assert parse_complex("3") == 3
    assert parse_complex("2.5e-1i") == 0.25j
    for bad in ("1+0j", "i1", "abc", ""):
        with pytest.raises(ValueError):
            parse_complex(bad)


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_complex_literal_round_trip(a, b):
    z = parse_complex(f"{a!r}{'+' if b >= 0 else '-'}{abs(b)!r}i")
    assert z == complex(a, b)


def test_defaults_reproduce_experiments():
    p = SweepConfig.experiment("power")
    assert (p.alpha, p.T, p.nonlinearity, p.phi1, p.phi2) == (2.0, 4.0, "power:1:1", 1, 1)
    assert p.epsilons == default_epsilons(0.5) and len(p.epsilons) == 11 and p.epsilons[-1] == 0.5 / 2**14
    assert p.taus == tuple(0.2 / 4**m for m in range(7))
    s = SweepConfig.experiment("sin2")
    assert (s.alpha, s.T, s.nonlinearity, s.epsilons[0]) == (3.0, 1.0, "sin2", 1.0)


def test_config_file_and_overrides(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# demo\nexperiment = sin2\nmethods = mti-f\ntaus = 0.2, 0.2/4^1  # two columns\nphi1 = 1-1i\n")
    values = read_config_file(f)
    cfg = config_from_mapping(values)
    assert cfg.alpha == 3.0 and cfg.methods == ("mti-f",) and cfg.taus == (0.2, 0.05) and cfg.phi1 == 1 - 1j
    values["methods"] = "mti-fa"
    assert config_from_mapping(values).methods == ("mti-fa",)
    f.write_text("bogus = 1\n")
    with pytest.raises(ValueError):
        read_config_file(f)


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(methods=("rk4",)).validate()
    with pytest.raises(ValueError):
        SweepConfig(methods=("cnfd",), nonlinearity="sin2", T=1.0).validate()
    with pytest.raises(ValueError):
        SweepConfig(taus=(0.2, 0.1)).validate()
    SweepConfig(taus=(0.2, 0.1), rates=False).validate()
    with pytest.raises(ValueError):
        SweepConfig(taus=(0.3,)).validate()


def test_empty_method_list():
    res = run_sweep(SweepConfig(methods=()))
    assert res.cells == () and emit_table(res, "csv").count("\n") == 1


def test_single_cell_csv(cache_dir):
    res = run_sweep(small_config(cache_dir, methods=("mti-fa",), epsilons=(0.5,), taus=(0.2,)))
    lines = emit_table(res, "csv").strip().splitlines()
    assert lines[0] == "method,epsilon,tau,error_y,error_dy_scaled,rate,status,wall_time_s"
    assert len(lines) == 2
    fields = lines[1].split(",")
    assert fields[0] == "mti-fa" and fields[6] == "ok"
    assert float(fields[3]) == pytest.approx(5.71e-1, rel=1e-2)


def test_unstable_rendering_and_rates(cache_dir):
    res = run_sweep(small_config(cache_dir))
    csv = emit_table(res, "csv").strip().splitlines()[1:]
    rows = [r.split(",") for r in csv]
    unstable = [r for r in rows if r[6] == "unstable"]
    assert unstable and all(r[3] == r[4] == "unstable" for r in unstable)
    # recompute rates from the emitted errors
    by_row = {}
    for r in rows:
        by_row.setdefault((r[0], r[1]), []).append(r)
    for seq in by_row.values():
        for prev, cur in zip(seq, seq[1:]):
            if cur[5]:
                assert abs(convergence_rate(float(prev[3]), float(cur[3])) - float(cur[5])) <= 1e-12
    md = emit_table(res, "markdown")
    assert "unstable" in md and "| rate |" in md


def test_parallel_equals_serial(cache_dir):
    serial = run_sweep(small_config(cache_dir))
    parallel = run_sweep(small_config(cache_dir, jobs=3))
    assert serial.records() == parallel.records()


def test_e_inf_is_column_max(cache_dir):
    res = run_sweep(small_config(cache_dir, methods=("mti-fa",)))
    g = res.grid("mti-fa")
    assert np.array_equal(res.e_inf("mti-fa"), g.max(axis=0))


def test_dump_trajectory_zero_horizon():
    pr = Problem(0.5, 2.0, PurePower(1, 1), 0.3 + 0.1j, 1, horizon_T=0.0)
    text = dump_trajectory(pr, "mti-fa", 0.1)
    assert text.splitlines() == ["t,re_y,im_y", "0,0.29999999999999999,0.10000000000000001"]


def test_dump_trajectory_linear():
    pr = Problem(1.0, 0.0, PurePower(0.0, 1), 1.0, 0.5, horizon_T=2.0)
    rows = np.loadtxt(dump_trajectory(pr, "mti-fa", 0.001, 10).splitlines()[1:], delimiter=",")
    assert rows.shape[0] == 201
    exact = np.cos(rows[:, 0]) + 0.5 * np.sin(rows[:, 0])
    assert np.max(np.abs(rows[:, 1] - exact)) <= 1e-8


def test_dump_trajectory_oscillation_period():
    eps = 0.05
    pr = Problem(eps, 2.0, PurePower(1, 1), horizon_T=0.2)
    rows = np.loadtxt(dump_trajectory(pr, "mti-fa", 1e-5).splitlines()[1:], delimiter=",")
    t, y = rows[:, 0], rows[:, 1] - np.mean(rows[:, 1])
    cross = t[:-1][np.sign(y[:-1]) != np.sign(y[1:])]
    period = 2 * np.mean(np.diff(cross))
    assert period == pytest.approx(2 * math.pi * eps**2, rel=0.2)


def test_cli_converge_and_exit_codes(cache_dir, capsys):
    assert main(["converge", "--method", "mti-fa", "--epsilon-list", "0.5", "--tau-list", "0.2,0.2/4^1",
                 "--output", "csv", "--cache-dir", cache_dir]) == 0
    out = capsys.readouterr().out
    assert out.startswith("method,epsilon,tau") and out.count("\n") == 3
    assert main(["converge", "--method", "nope"]) == 2
    assert main(["converge", "--tau-list", "0.2,0.1"]) == 2
    assert main(["converge", "--phi1", "1+0j"]) == 2


def test_cli_reference_failure_exit_code(tmp_path, capsys):
    code = main(["reference", "--epsilon-list", "0.5", "--T", "0.4", "--ref-tau", "0.05",
                 "--cache-dir", str(tmp_path)])
    # tau_ref 0.05 cannot pass the 1e-9 Richardson check
    assert code == 3


def test_cli_trajectory(capsys):
    assert main(["trajectory", "--method", "mti-f", "--epsilon-list", "0.5", "--tau-list", "0.1", "--T", "0.4",
                 "--stride", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,re_y,im_y" and len(lines) == 4


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "mtibench.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "validate-coeffs" in r.stdout
