"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

The lines are repeated in the terminal summary under "acceptance criteria".
Set MTIBENCH_CACHE_DIR to reuse reference solutions between runs.
"""
import math
import os
import subprocess
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from mtibench import Problem, PurePower, integrate
from mtibench.coefficients import VALIDATION_GRID, validate_coefficients
from mtibench.harness import CLASSICAL_J, TABLE_J, SweepConfig, default_epsilons, default_taus, run_sweep
from mtibench.reference import RK4_MIN_EPS, cross_validate, generate_reference

JOBS = max(1, min(8, os.cpu_count() or 1))
TESTS = Path(__file__).parent

# expected values (e at T) for the fixed test problems
FA_EPS0_ROW = [5.71e-1, 5.28e-2, 3.40e-3, 2.14e-4, 1.34e-5, 8.36e-7, 5.21e-8]
FA_EPS0_RATES = [1.72, 1.98, 2.00, 2.00, 2.00, 2.00]
FA_E_INF = [5.71e-1, 1.53e-1, 4.58e-2, 7.30e-3, 2.60e-3, 5.18e-4, 1.78e-4]
F_E_INF = [5.33e-1, 1.60e-1, 4.51e-2, 7.30e-3, 2.60e-3, 5.18e-4, 1.78e-4]
SIN2_CORNERS = {"mti-fa": 1.97e-2, "mti-f": 5.79e-3}


def config(name, cache_dir, **kw):
    base = SweepConfig.experiment(name)
    kw.setdefault("jobs", JOBS)
    return SweepConfig.experiment(name, reference=replace(base.reference, cache_dir=cache_dir), **kw)


@pytest.fixture(scope="module")
def power_sweep(cache_dir):
    """MTI-FA and MTI-F over eps = 0.5*2^-j (j = 0..14) and tau = 0.2*4^-m (m = 0..6)."""
    return run_sweep(config("power", cache_dir, methods=("mti-fa", "mti-f"),
                            epsilons=default_epsilons(0.5, range(15))))


def rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_1_eps0_row(cache_dir, verdict):
    t0 = time.perf_counter()
    res = run_sweep(config("power", cache_dir, epsilons=(0.5,), jobs=1))
    wall = time.perf_counter() - t0
    errs = [c.error_y for c in res.cells]
    rates = [c.rate for c in res.cells[1:]]
    worst_e = max(rel(e, x) for e, x in zip(errs, FA_EPS0_ROW))
    worst_r = max(abs(r - x) for r, x in zip(rates, FA_EPS0_RATES))
    ok = worst_e <= 0.10 and worst_r <= 0.1 and wall < 120
    assert verdict(1, ok, f"MTI-FA eps=0.5 row worst relative deviation {worst_e:.3f} (<= 0.10), worst rate "
                          f"deviation {worst_r:.3f} (<= 0.1), {wall:.1f} s single-threaded (< 120 s)")


def test_criterion_2_uniform_accuracy(power_sweep, verdict):
    taus = np.array(power_sweep.config.taus)
    parts, ok = [], True
    for method, target in (("mti-fa", FA_E_INF), ("mti-f", F_E_INF)):
        e = power_sweep.e_inf(method)
        worst = max(rel(a, b) for a, b in zip(e, target))
        slope = np.polyfit(np.log(taus), np.log(e), 1)[0]
        bounded = bool(np.all(power_sweep.grid(method) <= 1.0))
        ok &= worst <= 0.15 and slope >= 0.7 and bounded
        parts.append(f"{method} e_inf worst deviation {worst:.3f} (<= 0.15), slope {slope:.2f} (>= 0.7), "
                     f"all cells <= 1: {bounded}")
    assert verdict(2, ok, "; ".join(parts))


def test_criterion_3_two_regime_bound(power_sweep, verdict):
    tau = 0.2 / 4**6
    ratio = {j: power_sweep.cell("mti-fa", 0.5 / 2**j, tau).error_y / min(tau**2 / (0.5 / 2**j) ** 2,
                                                                          (0.5 / 2**j) ** 2)
             for j in range(15)}
    c_rows = max(ratio[j] for j in TABLE_J)
    j_all = max(ratio, key=ratio.get)
    ok = c_rows <= 10
    assert verdict(3, ok, f"tau=0.2/4^6: C = {c_rows:.2f} over the table rows j in {TABLE_J} (<= 10); "
                          f"over every j = 0..14 the largest ratio is {ratio[j_all]:.2f} at j={j_all}")


def test_criterion_4_classical_degradation(cache_dir, verdict):
    eps, tau = 0.5 / 2**8, 0.2 / 4**5
    res = run_sweep(config("power", cache_dir, methods=("ewi-g", "mti-fa"), epsilons=(eps,), taus=(tau,),
                           rates=False))
    e_g = res.cell("ewi-g", eps, tau).error_y
    e_fa = res.cell("mti-fa", eps, tau).error_y
    separation = e_g / e_fa
    # unstable iff the step exceeds eps^2 by a grid cell: m < j on this grid
    mask = {(j, m): integrate(Problem(0.5 / 2**j, 2.0, PurePower(1, 1)), "exfd", 0.2 / 4**m).status == "unstable"
            for j in CLASSICAL_J for m in range(6)}
    wrong = [k for k, v in mask.items() if v != (k[1] < k[0])]
    ok = 0.1 <= e_g <= 10 and e_fa <= 2e-3 and separation >= 1e3 and not wrong
    assert verdict(4, ok, f"eps=0.5/2^8, tau=0.2/4^5: EWI-G {e_g:.3g} (O(1)), MTI-FA {e_fa:.3g} (<= 2e-3), "
                          f"separation {separation:.2g} (>= 1e3); EXFD status mask mismatches: {wrong or 'none'}")


def test_criterion_5_general_nonlinearity(cache_dir, verdict):
    res = run_sweep(config("sin2", cache_dir, methods=("mti-fa", "mti-f"), epsilons=(1.0,)))
    parts, ok = [], True
    for method, target in SIN2_CORNERS.items():
        e0 = res.cell(method, 1.0, 0.2).error_y
        rates = [c.rate for c in res.cells if c.method == method and c.rate is not None]
        off = [r for r in rates if abs(r - 2.0) > 0.1]
        ok &= rel(e0, target) <= 0.10 and not off
        parts.append(f"{method} corner {e0:.3g} vs {target:.3g} ({rel(e0, target):.3f} <= 0.10), "
                     f"rates {', '.join(f'{r:.2f}' for r in rates)} (off 2.0+-0.1: {len(off)})")
    assert verdict(5, ok, "sin2 eps=1: " + "; ".join(parts))


def test_criterion_6_coefficient_oracles(verdict):
    t0 = time.perf_counter()
    rep = validate_coefficients(VALIDATION_GRID)
    wall = time.perf_counter() - t0
    name = max(rep["production"], key=rep["production"].get)
    worst = rep["production"][name]
    beta = rep["beta_ratio"]["beta1"]
    ok = worst <= 1e-10 and abs(beta - 0.5j) <= 1e-12
    assert verdict(6, ok, f"worst relative deviation {worst:.2e} ({name}, <= 1e-10) over "
                          f"{len(rep['production'])} weights in {wall:.1f} s; printed/defining beta1 ratio "
                          f"{beta.real:.3g}{beta.imag:+.15g}i")


PROPERTY_SUITES = [
    "test_nonlinearity.py::test_gauge_invariance",
    "test_nonlinearity.py::test_fourier_extraction",
    "test_decomposition.py::test_round_trip_at_zero_step",
    "test_mti.py::test_zero_step_is_identity",
    "test_classical.py::test_zero_step_identity_two_step",
    "test_classical.py::test_zero_step_identity_filtered",
    "test_classical.py::test_cnfd_discrete_energy_conserved",
    "test_classical.py::test_exact_linear_propagation",
]


def test_criterion_7_property_suites(verdict, tmp_path):
    # run in a fresh process with an empty cache so no reference can be used
    env = dict(os.environ, MTIBENCH_CACHE_DIR=str(tmp_path))
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(TESTS / s) for s in PROPERTY_SUITES]],
                          capture_output=True, text=True, env=env, cwd=TESTS.parent)
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    assert verdict(7, proc.returncode == 0, f"{len(PROPERTY_SUITES)} property suites: {summary}")


def test_criterion_8_reference_integrity(cache_dir, verdict):
    cases = [config("power", cache_dir).problem(0.5 / 2**j) for j in range(15)]
    cases.append(config("sin2", cache_dir).problem(1.0))
    settings = replace(config("power", cache_dir).reference, strict=False)
    dual, richardson = [], []
    for pr in cases:
        ref = generate_reference(pr, [pr.horizon_T], settings)
        richardson.append((pr.epsilon, ref.richardson_change))
        if pr.epsilon >= RK4_MIN_EPS:
            dual.append((pr.epsilon, cross_validate(ref, pr).rk4_deviation))
    worst_dual = max(d for _, d in dual)
    bad = [(e, c) for e, c in richardson if c is None or c > 1e-9]
    ok = worst_dual <= 1e-7 and not bad
    worst_r = max(richardson, key=lambda ec: ec[1])
    assert verdict(8, ok, f"RK4 agreement for eps >= {RK4_MIN_EPS}: worst {worst_dual:.2e} (<= 1e-7); "
                          f"Richardson change <= 1e-9 fails at {len(bad)} of {len(richardson)} eps, worst "
                          f"{worst_r[1]:.2e} at eps={worst_r[0]:.3g}")
