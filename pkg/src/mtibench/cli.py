"""Command line entry point: ``mtibench {converge,trajectory,reference,validate-coeffs}``.

Exit status: 0 on success (a sweep with unstable cells still succeeds),
2 on a configuration error, 3 when a reference cannot be produced or certified.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

from .coefficients import VALIDATION_GRID, validate_coefficients
from .harness import (config_from_mapping, dump_trajectory, emit_table, parse_number, read_config_file,
                      run_sweep)
from .integrate import METHODS
from .reference import CACHE_ENV, ReferenceError, cross_validate, generate_reference

EXIT_CONFIG = 2
EXIT_REFERENCE = 3

_FLAG_KEYS = {"method": "methods", "epsilon_list": "epsilons", "tau_list": "taus", "T": "T", "alpha": "alpha",
              "nonlinearity": "nonlinearity", "phi1": "phi1", "phi2": "phi2", "output": "output",
              "ref_tau": "ref_tau", "jobs": "jobs", "cache_dir": "cache_dir", "experiment": "experiment"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file (flags override it)")
    p.add_argument("--experiment", choices=("power", "sin2"), help="problem preset (default power)")
    p.add_argument("--method", help=f"comma list from: {', '.join(METHODS)}")
    p.add_argument("--epsilon-list", dest="epsilon_list", help="comma list, e.g. 0.5,0.5/2^1")
    p.add_argument("--tau-list", dest="tau_list", help="comma list, e.g. 0.2,0.2/4^1")
    p.add_argument("--T", dest="T", help="final time")
    p.add_argument("--alpha")
    p.add_argument("--nonlinearity", help="power:lambda:p or sin2[:N]")
    p.add_argument("--phi1", help="complex literal a+bi")
    p.add_argument("--phi2", help="complex literal a+bi")
    p.add_argument("--output", choices=("csv", "markdown"))
    p.add_argument("--ref-tau", dest="ref_tau", help="upper bound on the reference step (default 1e-6)")
    p.add_argument("--jobs", help="worker processes")
    p.add_argument("--cache-dir", dest="cache_dir", help=f"reference cache (default ${CACHE_ENV})")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtibench", description="Multiscale and classical integrators for "
                                 "eps^2 y'' + (alpha + 1/eps^2) y + f(y) = 0.")
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("converge", help="error/rate tables over an (eps, tau) grid"))
    tr = sub.add_parser("trajectory", help="dump t, Re y, Im y for one run")
    _common(tr)
    tr.add_argument("--stride", type=int, default=1, help="sample every STRIDE steps")
    _common(sub.add_parser("reference", help="generate, cache and cross-check reference solutions"))
    sub.add_parser("validate-coeffs", help="compare every weight with quadrature of its defining integral")
    return ap


def _config(args):
    values = read_config_file(args.config) if args.config else {}
    for flag, key in _FLAG_KEYS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    return config_from_mapping(values)


def _converge(args) -> int:
    cfg = _config(args)
    res = run_sweep(cfg)
    sys.stdout.write(emit_table(res, cfg.output))
    tol = cfg.reference.richardson_tol
    for e, ch in res.richardson.items():
        if ch is not None and not ch <= tol:
            print(f"warning: reference at eps={e:g} changed by {ch:.2e} under step halving (> {tol:.0e})",
                  file=sys.stderr)
    return 0


def _trajectory(args) -> int:
    cfg = _config(args)
    if len(cfg.methods) != 1 or len(cfg.epsilons) < 1 or len(cfg.taus) < 1:
        raise ValueError("trajectory needs one method; the first eps and tau of the lists are used")
    sys.stdout.write(dump_trajectory(cfg.problem(cfg.epsilons[0]), cfg.methods[0], cfg.taus[0], args.stride))
    return 0


def _reference(args) -> int:
    cfg = _config(args)
    settings = replace(cfg.reference, strict=True)
    for e in cfg.epsilons:
        problem = cfg.problem(e)
        ref = generate_reference(problem, [cfg.T], settings)
        print(cross_validate(ref, problem))
        print(f"  y(T) = {complex(ref.y[-1])!r}, y'(T) = {complex(ref.ydot[-1])!r}, fingerprint {ref.fingerprint}")
    return 0


def _validate(args) -> int:
    rep = validate_coefficients(VALIDATION_GRID)
    print("max relative deviation from quadrature of the defining integral")
    for name, v in rep["production"].items():
        print(f"  {name:8s} {v:.3e}")
    print(f"beta ratio (closed form / defining integral): {rep['beta_ratio']}")
    worst = max(rep["production"].values())
    return 0 if math.isfinite(worst) and worst <= 1e-10 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "cache_dir", None) is None and os.environ.get(CACHE_ENV):
        args.cache_dir = os.environ[CACHE_ENV]
    handlers = {"converge": _converge, "trajectory": _trajectory, "reference": _reference,
                "validate-coeffs": _validate}
    try:
        return handlers[args.command](args)
    except ReferenceError as exc:
        print(f"reference failure: {exc}", file=sys.stderr)
        return EXIT_REFERENCE
    except (ValueError, OSError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
