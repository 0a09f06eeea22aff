import json
import os

import numpy as np
import pytest

from mtibench import Problem, PurePower
from mtibench.reference import (ReferenceError, ReferenceSettings, cross_validate, fingerprint,
                                generate_reference, linear_deviation, read_record, rk4_rescaled, write_record)

POWER = PurePower(1, 1)
LINEAR = PurePower(0.0, 1)


def test_fine_step_hits_coarse_grids():
    tau = ReferenceSettings().fine_step()
    assert tau <= 1e-6 and (0.2 / tau) == 2 ** round(np.log2(0.2 / tau))


def test_zero_horizon_returns_initial_data(tmp_path):
    pr = Problem(0.5, 2.0, POWER, 1 + 0.5j, 2 - 1j, horizon_T=0.0)
    ref = generate_reference(pr, None, ReferenceSettings(cache_dir=str(tmp_path)))
    assert ref.y[0] == pr.phi1 and ref.ydot[0] == pr.phi2 / 0.25


def test_linear_problem_matches_closed_form():
    pr = Problem(0.5, 2.0, LINEAR)
    ref = generate_reference(pr, [1.0, 2.0, 4.0], ReferenceSettings(richardson=False))
    assert linear_deviation(ref, pr) <= 1e-9
    rep = cross_validate(ref, pr)
    assert rep.rk4_deviation <= 1e-9


def test_rk4_oracle_agrees_with_reference(cache_dir):
    pr = Problem(0.5, 2.0, POWER)
    ref = generate_reference(pr, None, ReferenceSettings(cache_dir=cache_dir, strict=False))
    rep = cross_validate(ref, pr)
    assert rep.rk4_deviation <= 1e-7
    assert "RK4" in rep.note


def test_small_eps_policy(cache_dir):
    pr = Problem(0.01, 2.0, POWER)
    ref = generate_reference(pr, None, ReferenceSettings(cache_dir=cache_dir, strict=False))
    rep = cross_validate(ref, pr)
    assert rep.note == "RK4 path skipped, Richardson only"
    assert rep.rk4_deviation is None and rep.mti_f_deviation <= 1e-8


def test_cache_is_bit_identical(tmp_path):
    pr = Problem(0.5, 2.0, POWER, horizon_T=0.4)
    s = ReferenceSettings(cache_dir=str(tmp_path))
    a = generate_reference(pr, [0.2, 0.4], s)
    files = sorted(os.listdir(tmp_path))
    assert any(f.endswith(".bin") for f in files) and any(f.endswith(".json") for f in files)
    b = generate_reference(pr, [0.2, 0.4], s)
    assert a.fingerprint == b.fingerprint
    assert np.array_equal(a.y, b.y) and np.array_equal(a.ydot, b.ydot)
    c = generate_reference(pr, [0.2, 0.4], ReferenceSettings(cache_dir=str(tmp_path / "csv"), cache_format="csv"))
    assert np.array_equal(a.y, c.y) and np.array_equal(a.ydot, c.ydot)


def test_record_layout(tmp_path):
    t = np.array([0.0, 0.5])
    y = np.array([1 + 2j, 3 - 4j])
    yd = np.array([5 + 6j, -7 + 8j])
    write_record(tmp_path / "r.bin", t, y, yd)
    raw = np.frombuffer((tmp_path / "r.bin").read_bytes(), dtype="<f8")
    assert raw.tolist() == [0, 1, 2, 5, 6, 0.5, 3, -4, -7, 8]
    write_record(tmp_path / "r.csv", t, y, yd)
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "t,re_y,im_y,re_ydot,im_ydot"
    for name in ("r.bin", "r.csv"):
        tt, yy, dd = read_record(tmp_path / name)
        assert np.array_equal(tt, t) and np.array_equal(yy, y) and np.array_equal(dd, yd)


def test_fingerprint_sensitivity():
    pr = Problem(0.5, 2.0, POWER)
    base = fingerprint(pr, [4.0], "mti-fa", 1e-6)
    assert fingerprint(pr.replace(alpha=2.0 + 1e-15), [4.0], "mti-fa", 1e-6) != base
    assert fingerprint(pr, [4.0], "mti-f", 1e-6) != base
    assert fingerprint(pr, [4.0], "mti-fa", 1e-6) == base


def test_strict_mode_refuses_uncertified():
    pr = Problem(0.5, 2.0, POWER, horizon_T=0.4)
    with pytest.raises(ReferenceError):
        generate_reference(pr, None, ReferenceSettings(tau_ref=0.05, anchor_step=None, richardson_tol=1e-30))
    ref = generate_reference(pr, None, ReferenceSettings(tau_ref=0.05, anchor_step=None, richardson_tol=1e-30,
                                                         strict=False))
    assert ref.richardson_change > 0 and not ref.certified()


def test_sample_times_validated():
    pr = Problem(0.5, 2.0, POWER, horizon_T=0.4)
    with pytest.raises(ValueError):
        generate_reference(pr, [0.5])
    with pytest.raises(ReferenceError):
        generate_reference(pr, [0.1 + 1e-7], ReferenceSettings(richardson=False))


def test_rk4_linear_closed_form():
    from mtibench.model import linear_solution
    pr = Problem(0.3, 1.0, LINEAR, 0.5 + 0.5j, -1j, horizon_T=1.0)
    y, yd = rk4_rescaled(pr, [0.5, 1.0])
    for t, a, b in zip((0.5, 1.0), y, yd):
        ex = linear_solution(pr, t)
        assert abs(a - ex.y) < 1e-9 and 0.09 * abs(b - ex.ydot) < 1e-9
